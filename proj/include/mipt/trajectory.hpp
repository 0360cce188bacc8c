// Trajectory execution and datasets: run a circuit instance on a tableau,
// record the outcome matrix and purification data, crop to light-cone
// windows, and serialize record sets.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/circuit.hpp"
#include "mipt/io.hpp"
#include "mipt/pauli.hpp"
#include "mipt/rng.hpp"
#include "mipt/tableau.hpp"

namespace mipt {

// Crop descriptor: layers 1..depth and `width` sites starting at
// center - (width-1)/2, wrapping periodically.
struct WindowSpec {
  size_t center = 0;
  size_t width = 0;
  size_t depth = 0;

  size_t first_site(size_t L) const {
    return width >= L ? 0 : (center + L - (width - 1) / 2) % L;
  }
  bool contains_site(size_t site, size_t L) const {
    return (site + L - first_site(L)) % L < width;
  }
  size_t column_of(size_t site, size_t L) const {
    return (site + L - first_site(L)) % L;
  }
};

// Statistical light cone of the reference's partner: one site per layer per
// side plus two sites of padding, clamped to the system.
inline WindowSpec lightcone_window(const CircuitInstance& inst, size_t t_p,
                                   size_t velocity = 1, size_t padding = 2) {
  WindowSpec w;
  w.center = inst.ref_site;
  w.depth = t_p;
  w.width = std::min(inst.num_sites, 2 * velocity * t_p + padding);
  return w;
}

struct TrajectoryRecord {
  size_t rows = 0;  // layers recorded
  size_t cols = 0;  // sites recorded
  std::vector<int8_t> outcomes;  // row-major rows x cols, entries -1/0/+1
  size_t t_p = 0;                // 1-based layer; 0 = never purified
  std::optional<Axis> axis;
  int label = 0;  // p_R as +1/-1; 0 when unpurified
  uint64_t trajectory_seed = 0;

  int8_t at(size_t layer, size_t site) const { return outcomes[layer * cols + site]; }
  bool purified() const { return t_p != 0; }
};

struct RunOptions {
  bool validate_tableau = false;
  // Stop simulating once purified and the outcome matrix is complete up to
  // this many layers (0 = always run the full depth).
  size_t min_layers = 0;
};

// One sampled branch of the monitored dynamics. The measurement stream is
// keyed by (circuit_seed, trajectory_seed); each undetermined measurement
// consumes exactly one bit.
inline TrajectoryRecord run_trajectory(const CircuitInstance& inst, uint64_t trajectory_seed,
                                       const RunOptions& opts = {}) {
  Tableau t(inst.num_qubits());
  prepare_initial_state(inst, t);
  RandomStream coins(hash_u64s({inst.spec.circuit_seed, trajectory_seed, tag::kTraj}));

  TrajectoryRecord rec;
  rec.rows = inst.depth();
  rec.cols = inst.num_sites;
  rec.outcomes.assign(rec.rows * rec.cols, 0);
  rec.trajectory_seed = trajectory_seed;

  for (size_t layer = 0; layer < inst.depth(); ++layer) {
    for (const GatePlacement& g : inst.layers[layer]) {
      t.apply_gate(g.gate, g.a, g.b);
    }
    for (size_t site : inst.measure_sites[layer]) {
      auto r = t.measure_z(site, [&] { return ConcreteSign{coins.next_bit()}; });
      rec.outcomes[layer * rec.cols + site] = r.value.negative ? -1 : 1;
    }
    if (opts.validate_tableau && !t.check_invariants()) {
      throw std::logic_error("tableau invariants broken during trajectory");
    }
    if (rec.t_p == 0 && !inst.measure_sites[layer].empty()) {
      if (auto elem = t.element_on_single_qubit(inst.ref_index())) {
        rec.t_p = layer + 1;
        rec.axis = elem->axis;
        rec.label = elem->sign.negative ? -1 : 1;
      }
    }
    if (rec.t_p != 0 && opts.min_layers != 0 && layer + 1 >= opts.min_layers) {
      rec.rows = layer + 1;
      rec.outcomes.resize(rec.rows * rec.cols);
      break;
    }
  }
  return rec;
}

// Empirical purification-time distribution: mass over t_p in {1..T} plus an
// unpurified bin, one trajectory per fresh circuit.
struct PurificationHistogram {
  std::vector<double> mass;  // index t_p-1 for t_p in 1..T
  double unpurified = 0.0;
  size_t circuits = 0;
};

template <class PerCircuit>
PurificationHistogram purification_histogram(const CircuitSpec& family, size_t num_circuits,
                                             PerCircuit&& seed_of_circuit) {
  PurificationHistogram h;
  h.mass.assign(family.T, 0.0);
  h.circuits = num_circuits;
  for (size_t c = 0; c < num_circuits; ++c) {
    CircuitSpec spec = family;
    spec.circuit_seed = seed_of_circuit(c);
    CircuitInstance inst = build_circuit(spec);
    TrajectoryRecord rec = run_trajectory(inst, 0, {.min_layers = 1});
    if (rec.purified()) {
      h.mass[rec.t_p - 1] += 1.0;
    } else {
      h.unpurified += 1.0;
    }
  }
  for (double& m : h.mass) {
    m /= static_cast<double>(num_circuits);
  }
  h.unpurified /= static_cast<double>(num_circuits);
  return h;
}

inline PurificationHistogram purification_histogram(const CircuitSpec& family,
                                                    size_t num_circuits, uint64_t base_seed) {
  return purification_histogram(family, num_circuits,
                                [&](size_t c) { return hash_u64s({base_seed, c}); });
}

struct DatasetRecord {
  std::vector<int8_t> outcomes;  // depth x width, row-major
  int8_t label = 0;
  uint64_t trajectory_seed = 0;
};

struct Dataset {
  uint16_t L = 0;
  uint16_t T = 0;
  double p = 0.0;
  uint64_t circuit_seed = 0;
  Axis axis = Axis::Z;
  std::optional<WindowSpec> window;  // absent = full T x L records
  std::vector<DatasetRecord> records;

  size_t record_rows() const { return window ? window->depth : T; }
  size_t record_cols() const { return window ? window->width : L; }
};

inline DatasetRecord crop_record(const TrajectoryRecord& rec, size_t L,
                                 const std::optional<WindowSpec>& window, int8_t label) {
  DatasetRecord out;
  out.label = label;
  out.trajectory_seed = rec.trajectory_seed;
  if (!window) {
    out.outcomes = rec.outcomes;
    return out;
  }
  out.outcomes.assign(window->depth * window->width, 0);
  size_t first = window->first_site(L);
  for (size_t layer = 0; layer < window->depth; ++layer) {
    for (size_t k = 0; k < window->width; ++k) {
      size_t site = (first + k) % L;
      out.outcomes[layer * window->width + k] = rec.at(layer, site);
    }
  }
  return out;
}

struct GenerateOptions {
  uint64_t first_trajectory_seed = 0;
  // Keep records of unpurified runs with labels drawn from the seeded coin
  // stream; used only by the null (random-label) experiment.
  bool force_random_labels = false;
  bool validate_tableau = false;
};

// N_t labeled records from one circuit. The circuit must purify (probed with
// trajectory 0) unless force_random_labels is set.
inline Dataset generate_dataset(const CircuitInstance& inst, size_t num_records,
                                const std::optional<WindowSpec>& window,
                                const GenerateOptions& opts = {}) {
  Dataset ds;
  ds.L = static_cast<uint16_t>(inst.num_sites);
  ds.T = static_cast<uint16_t>(inst.depth());
  ds.p = inst.spec.p;
  ds.circuit_seed = inst.spec.circuit_seed;
  ds.window = window;
  if (window && (window->depth > inst.depth() || window->width > inst.num_sites)) {
    throw std::invalid_argument("window exceeds circuit dimensions");
  }

  RunOptions run_opts;
  run_opts.validate_tableau = opts.validate_tableau;
  run_opts.min_layers = window ? window->depth : 0;

  TrajectoryRecord probe = run_trajectory(inst, opts.first_trajectory_seed, run_opts);
  if (!probe.purified() && !opts.force_random_labels) {
    throw std::runtime_error("circuit not decodable at depth T");
  }
  if (probe.purified()) {
    ds.axis = *probe.axis;
  }

  RandomStream label_coins(hash_u64s({inst.spec.circuit_seed, tag::kLabel}));
  ds.records.reserve(num_records);
  for (size_t i = 0; i < num_records; ++i) {
    uint64_t seed = opts.first_trajectory_seed + i;
    TrajectoryRecord rec = i == 0 ? std::move(probe) : run_trajectory(inst, seed, run_opts);
    int8_t label = rec.purified() ? static_cast<int8_t>(rec.label)
                                  : static_cast<int8_t>(label_coins.next_bit() ? 1 : -1);
    ds.records.push_back(crop_record(rec, inst.num_sites, window, label));
  }
  return ds;
}

inline constexpr char kDatasetMagic[8] = {'M', 'I', 'P', 'T', '-', 'D', 'S', '\0'};
inline constexpr uint16_t kDatasetVersion = 1;

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  io::put_bytes(os, kDatasetMagic, 8);
  io::put_u16(os, kDatasetVersion);
  io::put_u16(os, ds.L);
  io::put_u16(os, ds.T);
  io::put_f64(os, ds.p);
  io::put_u64(os, ds.circuit_seed);
  io::put_u8(os, static_cast<uint8_t>(ds.axis));
  io::put_u16(os, ds.window ? static_cast<uint16_t>(ds.window->center) : 0);
  io::put_u16(os, ds.window ? static_cast<uint16_t>(ds.window->width) : 0);
  io::put_u16(os, ds.window ? static_cast<uint16_t>(ds.window->depth) : 0);
  io::put_u64(os, ds.records.size());
  size_t cells = ds.record_rows() * ds.record_cols();
  for (const DatasetRecord& r : ds.records) {
    if (r.outcomes.size() != cells) {
      throw std::logic_error("record shape does not match dataset header");
    }
    io::put_bytes(os, reinterpret_cast<const char*>(r.outcomes.data()), cells);
    io::put_i8(os, r.label);
    io::put_u64(os, r.trajectory_seed);
  }
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  write_dataset(os, ds);
  if (!os) {
    throw std::runtime_error("write failed: " + path);
  }
}

inline Dataset read_dataset(std::istream& is) {
  char magic[8];
  io::get_bytes(is, magic, 8);
  for (int k = 0; k < 8; ++k) {
    if (magic[k] != kDatasetMagic[k]) {
      throw std::runtime_error("not a dataset file (bad magic)");
    }
  }
  uint16_t version = io::get_u16(is);
  if (version != kDatasetVersion) {
    throw std::runtime_error("unsupported dataset version");
  }
  Dataset ds;
  ds.L = io::get_u16(is);
  ds.T = io::get_u16(is);
  ds.p = io::get_f64(is);
  ds.circuit_seed = io::get_u64(is);
  uint8_t axis = io::get_u8(is);
  if (axis > 2) {
    throw std::runtime_error("invalid axis byte");
  }
  ds.axis = static_cast<Axis>(axis);
  uint16_t center = io::get_u16(is);
  uint16_t width = io::get_u16(is);
  uint16_t depth = io::get_u16(is);
  if (width != 0 || depth != 0) {
    ds.window = WindowSpec{center, width, depth};
  }
  uint64_t n = io::get_u64(is);
  size_t cells = ds.record_rows() * ds.record_cols();
  ds.records.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    DatasetRecord& r = ds.records[i];
    r.outcomes.resize(cells);
    io::get_bytes(is, reinterpret_cast<char*>(r.outcomes.data()), cells);
    r.label = io::get_i8(is);
    r.trajectory_seed = io::get_u64(is);
  }
  return ds;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  return read_dataset(is);
}

}  // namespace mipt
