// Brickwall hybrid circuits, fully determined by a seed. Gate randomness is
// keyed per (layer, leftmost site) and measurement coins per (layer, site),
// so any part of a circuit can be regenerated independently and strips cut
// from a circuit reuse bit-identical gates.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mipt/clifford.hpp"
#include "mipt/rng.hpp"
#include "mipt/tableau.hpp"

namespace mipt {

enum class InitKind : uint8_t { kProduct = 0, kScrambled = 1 };

struct CircuitSpec {
  size_t L = 0;
  size_t T = 0;
  double p = 0.0;
  uint64_t circuit_seed = 0;
  InitKind init = InitKind::kProduct;
  size_t ref_site = 0;  // defaulted to L/2 by make()
  bool final_measurement_round = true;

  static CircuitSpec make(size_t L, size_t T, double p, uint64_t seed,
                          InitKind init = InitKind::kProduct) {
    CircuitSpec s;
    s.L = L;
    s.T = T;
    s.p = p;
    s.circuit_seed = seed;
    s.init = init;
    s.ref_site = L / 2;
    s.validate();
    return s;
  }

  void validate() const {
    if (L < 2 || L % 2 != 0) {
      throw std::invalid_argument("L must be even and at least 2");
    }
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("p must lie in [0, 1]");
    }
    if (ref_site >= L) {
      throw std::invalid_argument("ref_site must be below L");
    }
  }
};

struct GatePlacement {
  size_t a = 0;  // first site of the brickwall pair
  size_t b = 0;
  CliffordGate gate;
};

// A concrete circuit: per-layer gate lists and measurement sites, plus an
// optional unitary-only scramble prefix. Subcircuits are instances too, with
// num_sites < spec.L and open boundaries.
struct CircuitInstance {
  CircuitSpec spec;
  size_t num_sites = 0;
  size_t ref_site = 0;
  std::vector<std::vector<GatePlacement>> layers;
  std::vector<std::vector<size_t>> measure_sites;  // ascending within a layer
  std::vector<std::vector<GatePlacement>> scramble_prefix;

  size_t depth() const { return layers.size(); }
  size_t ref_index() const { return num_sites; }  // tableau qubit of the reference
  size_t num_qubits() const { return num_sites + 1; }
};

inline CircuitInstance build_circuit(const CircuitSpec& spec) {
  spec.validate();
  CircuitInstance inst;
  inst.spec = spec;
  inst.num_sites = spec.L;
  inst.ref_site = spec.ref_site;
  inst.layers.resize(spec.T);
  inst.measure_sites.resize(spec.T);
  for (size_t layer = 0; layer < spec.T; ++layer) {
    for (size_t i = 0; i < spec.L / 2; ++i) {
      size_t a = layer % 2 == 0 ? 2 * i : (2 * i + 1);
      size_t b = layer % 2 == 0 ? 2 * i + 1 : (2 * i + 2) % spec.L;
      RandomStream stream(hash_u64s({spec.circuit_seed, layer, a, tag::kGate}));
      inst.layers[layer].push_back({a, b, sample_random_clifford_2q(stream)});
    }
    bool last = layer + 1 == spec.T;
    if (last && !spec.final_measurement_round) {
      continue;
    }
    for (size_t site = 0; site < spec.L; ++site) {
      RandomStream stream(hash_u64s({spec.circuit_seed, layer, site, tag::kMeas}));
      if (stream.next_double() < spec.p) {
        inst.measure_sites[layer].push_back(site);
      }
    }
  }
  if (spec.init == InitKind::kScrambled) {
    size_t depth_s = spec.L;  // scramble depth grows with system size
    inst.scramble_prefix.resize(depth_s);
    for (size_t layer = 0; layer < depth_s; ++layer) {
      for (size_t i = 0; i < spec.L / 2; ++i) {
        size_t a = layer % 2 == 0 ? 2 * i : (2 * i + 1);
        size_t b = layer % 2 == 0 ? 2 * i + 1 : (2 * i + 2) % spec.L;
        RandomStream stream(hash_u64s({spec.circuit_seed, layer, a, tag::kScramble}));
        inst.scramble_prefix[layer].push_back({a, b, sample_random_clifford_2q(stream)});
      }
    }
  }
  return inst;
}

// Prepare the circuit's initial state in `t` (product or scrambled) and
// maximally entangle the reference with ref_site: H on the partner, then
// CNOT partner -> reference.
template <class Sign>
void prepare_initial_state(const CircuitInstance& inst, BasicTableau<Sign>& t) {
  if (t.num_qubits() != inst.num_qubits()) {
    throw std::invalid_argument("tableau size does not match circuit");
  }
  for (const auto& layer : inst.scramble_prefix) {
    for (const GatePlacement& g : layer) {
      t.apply_gate(g.gate, g.a, g.b);
    }
  }
  t.h(inst.ref_site);
  t.cnot(inst.ref_site, inst.ref_index());
}

// Cut the width-L_B strip centered on the parent's ref_site. Gates fully
// inside the strip are copied verbatim; gates straddling the open edge are
// dropped (the wrap pair survives only when L_B == L). Measurement sites are
// re-indexed into strip coordinates.
inline CircuitInstance derive_subcircuit(const CircuitInstance& parent, size_t strip_width) {
  size_t L = parent.num_sites;
  if (strip_width % 2 != 0 || strip_width < 4 || strip_width > L) {
    throw std::invalid_argument("strip width must be even and in [4, L]");
  }
  size_t start = (parent.ref_site + L - strip_width / 2) % L;
  auto offset_of = [&](size_t site) { return (site + L - start) % L; };
  auto inside = [&](size_t site) { return offset_of(site) < strip_width; };

  CircuitInstance sub;
  sub.spec = parent.spec;
  sub.num_sites = strip_width;
  sub.ref_site = strip_width / 2;
  auto cut_layers = [&](const std::vector<std::vector<GatePlacement>>& src,
                        std::vector<std::vector<GatePlacement>>& dst) {
    dst.resize(src.size());
    for (size_t layer = 0; layer < src.size(); ++layer) {
      for (const GatePlacement& g : src[layer]) {
        if (!inside(g.a) || !inside(g.b)) {
          continue;
        }
        size_t oa = offset_of(g.a), ob = offset_of(g.b);
        // Adjacent on the ring but split by the strip's open edge.
        if (oa + 1 != ob && ob + 1 != oa && strip_width < L) {
          continue;
        }
        dst[layer].push_back({oa, ob, g.gate});
      }
    }
  };
  cut_layers(parent.layers, sub.layers);
  cut_layers(parent.scramble_prefix, sub.scramble_prefix);
  sub.measure_sites.resize(parent.measure_sites.size());
  for (size_t layer = 0; layer < parent.measure_sites.size(); ++layer) {
    for (size_t site : parent.measure_sites[layer]) {
      if (inside(site)) {
        sub.measure_sites[layer].push_back(offset_of(site));
      }
    }
    std::sort(sub.measure_sites[layer].begin(), sub.measure_sites[layer].end());
  }
  return sub;
}

}  // namespace mipt
