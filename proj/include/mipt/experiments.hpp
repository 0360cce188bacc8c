// Experiment protocols over circuit ensembles: training-sample complexity,
// learnability curves, coherent-information decay, finite-size crossing,
// strip scalability, and reconstruction of learnability from complexity
// data. Every result is a pure function of its options struct; CSV writers
// print floats in shortest round-trip form so reruns are byte-identical.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/circuit.hpp"
#include "mipt/nn.hpp"
#include "mipt/rng.hpp"
#include "mipt/trajectory.hpp"

namespace mipt {

enum class WindowMode : uint8_t { kLightcone = 0, kWhole = 1 };

inline const char* to_string(WindowMode m) {
  return m == WindowMode::kLightcone ? "lightcone" : "whole";
}

// Training inputs always stop at the purification layer; the mode only picks
// the spatial extent.
inline WindowSpec experiment_window(const CircuitInstance& inst, size_t t_p, WindowMode mode) {
  if (mode == WindowMode::kLightcone) {
    return lightcone_window(inst, t_p);
  }
  return WindowSpec{inst.ref_site, inst.num_sites, t_p};
}

namespace detail {

// Shortest decimal form that round-trips; "nan" for missing aggregates.
inline std::string fmt(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline uint64_t circuit_seed_at(uint64_t base_seed, size_t index) {
  return hash_u64s({base_seed, index});
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v, double mean) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double s = 0.0;
  for (double x : v) {
    s += (x - mean) * (x - mean);
  }
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training-sample complexity at fixed purification time.

struct ComplexityResult {
  double p = 0.0;
  size_t L = 0;
  size_t t_p = 0;
  WindowMode window = WindowMode::kLightcone;
  std::vector<uint64_t> circuit_seeds;  // postselected circuits, generation order
  std::vector<size_t> m_values;         // per-circuit M; 0 = criterion not reached
  double m_bar = 0.0;                   // mean over reached circuits only
  double m_std = 0.0;                   // standard deviation across reached circuits
  double fail_fraction = 0.0;
  double delta = 0.2;
  bool flagged = false;  // fail_fraction exceeded delta
};

struct ComplexityOptions {
  CircuitSpec family;              // circuit_seed ignored; seeds come from base_seed
  std::vector<size_t> t_p_values;  // distinct, each in [1, family.T]
  size_t n_circuits = 20;          // quota per t_p value
  WindowMode window = WindowMode::kLightcone;
  nn::MinSamplesOptions samples;
  double delta = 0.2;
  uint64_t base_seed = 1;
  size_t generation_cap = 1000000;
};

// Fresh circuits are generated in seed order and postselected on the probe
// trajectory's t_p until every requested bucket holds n_circuits; outcomes
// after t_p are discarded by construction of the training window.
inline std::vector<ComplexityResult> complexity_experiment(const ComplexityOptions& opts) {
  if (opts.t_p_values.empty()) {
    throw std::invalid_argument("no purification times requested");
  }
  for (size_t i = 0; i < opts.t_p_values.size(); ++i) {
    size_t t = opts.t_p_values[i];
    if (t < 1 || t > opts.family.T) {
      throw std::invalid_argument("requested t_p outside [1, T]");
    }
    for (size_t j = i + 1; j < opts.t_p_values.size(); ++j) {
      if (opts.t_p_values[j] == t) {
        throw std::invalid_argument("duplicate t_p requested");
      }
    }
  }

  std::vector<ComplexityResult> results(opts.t_p_values.size());
  for (size_t i = 0; i < results.size(); ++i) {
    results[i].p = opts.family.p;
    results[i].L = opts.family.L;
    results[i].t_p = opts.t_p_values[i];
    results[i].window = opts.window;
    results[i].delta = opts.delta;
  }

  size_t remaining = opts.t_p_values.size() * opts.n_circuits;
  for (size_t c = 0; c < opts.generation_cap && remaining > 0; ++c) {
    CircuitSpec spec = opts.family;
    spec.circuit_seed = detail::circuit_seed_at(opts.base_seed, c);
    CircuitInstance inst = build_circuit(spec);
    TrajectoryRecord probe = run_trajectory(inst, 0, {.min_layers = 1});
    if (!probe.purified()) {
      continue;
    }
    ComplexityResult* bucket = nullptr;
    for (ComplexityResult& r : results) {
      if (r.t_p == probe.t_p && r.m_values.size() < opts.n_circuits) {
        bucket = &r;
        break;
      }
    }
    if (bucket == nullptr) {
      continue;
    }
    WindowSpec window = experiment_window(inst, probe.t_p, opts.window);
    nn::MinSamplesOptions so = opts.samples;
    so.model_seed = hash_u64s({opts.base_seed, spec.circuit_seed});
    nn::MinSamplesResult res = nn::min_training_samples(inst, window, so);
    bucket->circuit_seeds.push_back(spec.circuit_seed);
    bucket->m_values.push_back(res.reached ? res.min_samples : 0);
    --remaining;
  }
  if (remaining > 0) {
    throw std::runtime_error("insufficient circuits with requested t_p within generation budget");
  }

  for (ComplexityResult& r : results) {
    std::vector<double> reached;
    for (size_t m : r.m_values) {
      if (m != 0) {
        reached.push_back(static_cast<double>(m));
      }
    }
    r.m_bar = detail::mean_of(reached);
    r.m_std = detail::stddev_of(reached, r.m_bar);
    r.fail_fraction = 1.0 - static_cast<double>(reached.size()) /
                                static_cast<double>(r.m_values.size());
    r.flagged = r.fail_fraction > r.delta;
  }
  return results;
}

inline std::vector<ComplexityResult> scrambled_complexity_experiment(ComplexityOptions opts) {
  opts.family.init = InitKind::kScrambled;
  return complexity_experiment(opts);
}

// ---------------------------------------------------------------------------
// Learnability curve without postselection on t_p.

struct LearnabilityCurve {
  double p = 0.0;
  size_t L = 0;
  size_t T = 0;
  std::vector<size_t> budgets;      // ascending N_t grid
  std::vector<double> ratio;        // fraction of circuits learned at each budget
  size_t n_circuits = 0;
  double purified_fraction = 0.0;   // empirical saturation bound over the same circuits
  std::vector<size_t> min_samples;  // per circuit; 0 = never learned
};

struct LearnabilityOptions {
  CircuitSpec family;
  std::vector<size_t> budgets;
  size_t n_circuits = 20;
  WindowMode window = WindowMode::kLightcone;
  nn::MinSamplesOptions samples;  // grid is replaced by `budgets`
  uint64_t base_seed = 1;
};

// Each circuit is trained on nested prefixes of one trajectory set, so the
// learned indicator is a step function of the budget and the curve is
// non-decreasing by construction. Unpurified circuits count unlearned at
// every budget.
inline LearnabilityCurve learnability_experiment(const LearnabilityOptions& opts) {
  if (opts.budgets.empty()) {
    throw std::invalid_argument("no budgets requested");
  }
  if (!std::is_sorted(opts.budgets.begin(), opts.budgets.end())) {
    throw std::invalid_argument("budgets must be ascending");
  }
  if (opts.n_circuits == 0) {
    throw std::invalid_argument("need at least one circuit");
  }

  LearnabilityCurve curve;
  curve.p = opts.family.p;
  curve.L = opts.family.L;
  curve.T = opts.family.T;
  curve.budgets = opts.budgets;
  curve.n_circuits = opts.n_circuits;

  size_t purified = 0;
  for (size_t c = 0; c < opts.n_circuits; ++c) {
    CircuitSpec spec = opts.family;
    spec.circuit_seed = detail::circuit_seed_at(opts.base_seed, c);
    CircuitInstance inst = build_circuit(spec);
    TrajectoryRecord probe = run_trajectory(inst, 0, {.min_layers = 1});
    if (!probe.purified()) {
      curve.min_samples.push_back(0);
      continue;
    }
    ++purified;
    WindowSpec window = experiment_window(inst, probe.t_p, opts.window);
    nn::MinSamplesOptions so = opts.samples;
    so.grid = opts.budgets;
    so.stop_at_success = true;
    so.model_seed = hash_u64s({opts.base_seed, spec.circuit_seed});
    nn::MinSamplesResult res = nn::min_training_samples(inst, window, so);
    curve.min_samples.push_back(res.reached ? res.min_samples : 0);
  }
  curve.purified_fraction = static_cast<double>(purified) / static_cast<double>(opts.n_circuits);

  curve.ratio.resize(curve.budgets.size());
  for (size_t k = 0; k < curve.budgets.size(); ++k) {
    size_t learned = 0;
    for (size_t m : curve.min_samples) {
      if (m != 0 && m <= curve.budgets[k]) {
        ++learned;
      }
    }
    curve.ratio[k] = static_cast<double>(learned) / static_cast<double>(opts.n_circuits);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Coherent information: exact reference entropy versus the learnability
// estimate at each depth.

struct CoherentInfoSeries {
  double p = 0.0;
  size_t L = 0;
  std::vector<size_t> t;        // 0..T
  std::vector<double> s_q;      // mean reference entropy, exact
  std::vector<double> s_q_nn;   // 1 - learned fraction; empty when budget = 0
  size_t n_circuits = 0;
};

struct CoherentInfoOptions {
  size_t T = 16;
  size_t n_circuits = 100;
  uint64_t base_seed = 1;
  // Trajectory budget for the learnability estimate; 0 computes the exact
  // series only.
  size_t budget = 0;
  WindowMode window = WindowMode::kLightcone;
  nn::MinSamplesOptions samples;  // grid is replaced by {budget}
  InitKind init = InitKind::kProduct;
  bool final_measurement_round = true;
};

// Per circuit the reference entropy is 1 before t_p and 0 from t_p on, so the
// exact mean entropy at depth t equals the fraction of circuits not yet
// purified. A circuit counts learnable at depth t when it purified by t and
// one training at the fixed budget (on outcomes up to t_p) reaches the error
// criterion, so each circuit trains at most once.
inline CoherentInfoSeries coherent_info_series(double p, size_t L,
                                               const CoherentInfoOptions& opts) {
  if (opts.n_circuits == 0) {
    throw std::invalid_argument("need at least one circuit");
  }
  CircuitSpec family = CircuitSpec::make(L, opts.T, p, 0, opts.init);
  family.final_measurement_round = opts.final_measurement_round;

  CoherentInfoSeries series;
  series.p = p;
  series.L = L;
  series.n_circuits = opts.n_circuits;
  series.t.resize(opts.T + 1);
  for (size_t t = 0; t <= opts.T; ++t) {
    series.t[t] = t;
  }

  std::vector<size_t> purify_layer(opts.n_circuits, 0);  // 0 = unpurified
  std::vector<uint8_t> learned(opts.n_circuits, 0);
  for (size_t c = 0; c < opts.n_circuits; ++c) {
    CircuitSpec spec = family;
    spec.circuit_seed = detail::circuit_seed_at(opts.base_seed, c);
    CircuitInstance inst = build_circuit(spec);
    TrajectoryRecord probe = run_trajectory(inst, 0, {.min_layers = 1});
    purify_layer[c] = probe.t_p;
    if (opts.budget == 0 || !probe.purified()) {
      continue;
    }
    WindowSpec window = experiment_window(inst, probe.t_p, opts.window);
    nn::MinSamplesOptions so = opts.samples;
    so.grid = {opts.budget};
    so.model_seed = hash_u64s({opts.base_seed, spec.circuit_seed});
    learned[c] = nn::min_training_samples(inst, window, so).reached ? 1 : 0;
  }

  series.s_q.resize(opts.T + 1);
  if (opts.budget > 0) {
    series.s_q_nn.resize(opts.T + 1);
  }
  for (size_t t = 0; t <= opts.T; ++t) {
    size_t entangled = 0;
    size_t decoded = 0;
    for (size_t c = 0; c < opts.n_circuits; ++c) {
      bool pure = purify_layer[c] != 0 && purify_layer[c] <= t;
      if (!pure) {
        ++entangled;
      } else if (learned[c]) {
        ++decoded;
      }
    }
    series.s_q[t] = static_cast<double>(entangled) / static_cast<double>(opts.n_circuits);
    if (opts.budget > 0) {
      series.s_q_nn[t] =
          1.0 - static_cast<double>(decoded) / static_cast<double>(opts.n_circuits);
    }
  }
  return series;
}

inline std::vector<CoherentInfoSeries> coherent_info_experiment(
    const std::vector<double>& p_values, const std::vector<size_t>& L_values,
    const CoherentInfoOptions& opts) {
  std::vector<CoherentInfoSeries> all;
  for (double p : p_values) {
    for (size_t L : L_values) {
      all.push_back(coherent_info_series(p, L, opts));
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// Finite-size crossing of the scaled decay rate.

struct LambdaPoint {
  size_t L = 0;
  double p = 0.0;
  size_t t_d = 0;
  double lambda = 0.0;
  double l_lambda = 0.0;
  double l_lambda_err = 0.0;
  bool valid = false;  // false when the log-derivative stencil hit s_q = 0
};

struct CrossingResult {
  double tau_d = 0.0;
  std::vector<LambdaPoint> points;  // input order
  bool crossing_found = false;
  double p_lo = std::numeric_limits<double>::quiet_NaN();
  double p_hi = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Decay rate |d ln S_Q/dt| at t_d = round(tau_d * L) by central difference,
// one-sided at the ends of the series. The uncertainty propagates the
// binomial standard error of each S_Q sample through the log difference.
inline CrossingResult crossing_analysis(const std::vector<CoherentInfoSeries>& series,
                                        double tau_d) {
  std::vector<size_t> sizes;
  for (const CoherentInfoSeries& s : series) {
    if (std::find(sizes.begin(), sizes.end(), s.L) == sizes.end()) {
      sizes.push_back(s.L);
    }
  }
  if (sizes.size() < 2) {
    throw std::invalid_argument("need >= 2 sizes");
  }
  std::sort(sizes.begin(), sizes.end());

  CrossingResult res;
  res.tau_d = tau_d;
  for (const CoherentInfoSeries& s : series) {
    LambdaPoint pt;
    pt.L = s.L;
    pt.p = s.p;
    size_t t_max = s.t.empty() ? 0 : s.t.back();
    pt.t_d = static_cast<size_t>(std::llround(tau_d * static_cast<double>(s.L)));
    if (pt.t_d > t_max) {
      pt.t_d = t_max;
      res.warnings.push_back("t_d clamped to series end for L=" + std::to_string(s.L));
    }
    size_t a = pt.t_d > 0 ? pt.t_d - 1 : 0;
    size_t b = pt.t_d < t_max ? pt.t_d + 1 : t_max;
    if (a == b || s.s_q[a] <= 0.0 || s.s_q[b] <= 0.0) {
      res.warnings.push_back("S_Q vanished near t_d for L=" + std::to_string(s.L) +
                             " p=" + detail::fmt(s.p));
      res.points.push_back(pt);
      continue;
    }
    double span = static_cast<double>(b - a);
    pt.lambda = std::abs(std::log(s.s_q[b]) - std::log(s.s_q[a])) / span;
    pt.l_lambda = static_cast<double>(s.L) * pt.lambda;
    if (s.n_circuits > 0) {
      double n = static_cast<double>(s.n_circuits);
      auto rel_err = [&](double v) { return std::sqrt(v * (1.0 - v) / n) / v; };
      pt.l_lambda_err = static_cast<double>(s.L) *
                        std::sqrt(rel_err(s.s_q[a]) * rel_err(s.s_q[a]) +
                                  rel_err(s.s_q[b]) * rel_err(s.s_q[b])) /
                        span;
    }
    pt.valid = true;
    res.points.push_back(pt);
  }

  // Ordering inversion: below the transition larger sizes decay slower in
  // scaled time, so for every size pair the larger-minus-smaller rate runs
  // negative to positive as p grows. Each pair contributes the grid bracket
  // of its first such flip (an exact tie degenerates to a point); the
  // crossing interval is the union over pairs, since the smallest sizes
  // carry the largest corrections and need not reorder on the same step.
  // The reversed direction is a fallback for decreasing inputs.
  std::vector<double> grid;
  for (const LambdaPoint& pt : res.points) {
    if (std::find(grid.begin(), grid.end(), pt.p) == grid.end()) {
      grid.push_back(pt.p);
    }
  }
  std::sort(grid.begin(), grid.end());
  auto rate_at = [&](size_t L, double p) -> std::optional<double> {
    for (const LambdaPoint& pt : res.points) {
      if (pt.L == L && pt.p == p && pt.valid) {
        return pt.l_lambda;
      }
    }
    return std::nullopt;
  };
  auto bracket = [&](double sign) {
    bool found = false;
    for (size_t i = 0; i < sizes.size(); ++i) {
      for (size_t j = i + 1; j < sizes.size(); ++j) {
        std::vector<double> ps;
        std::vector<double> diff;
        for (double p : grid) {
          auto lo = rate_at(sizes[i], p);
          auto hi = rate_at(sizes[j], p);
          if (lo && hi) {
            ps.push_back(p);
            diff.push_back(*hi - *lo);
          }
        }
        for (size_t k = 0; k + 1 < ps.size(); ++k) {
          bool flip = sign * diff[k] < 0.0 && sign * diff[k + 1] > 0.0;
          if (!flip && diff[k] != 0.0) {
            continue;
          }
          double lo = ps[k];
          double hi = flip ? ps[k + 1] : ps[k];
          if (!found || lo < res.p_lo) {
            res.p_lo = lo;
          }
          if (!found || hi > res.p_hi) {
            res.p_hi = hi;
          }
          found = true;
          break;
        }
      }
    }
    res.crossing_found = res.crossing_found || found;
    return found;
  };
  if (!bracket(1.0)) {
    bracket(-1.0);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Strip scalability: train on the sub-circuit, decode the parent.

struct ScalabilityCell {
  size_t strip_width = 0;
  size_t t_p = 0;
  size_t n_circuits = 0;
  size_t n_learned = 0;
  double ratio = 0.0;
};

struct ScalabilityResult {
  double p = 0.0;
  size_t L = 0;
  size_t T = 0;
  size_t budget = 0;
  size_t n_postselected = 0;
  std::vector<ScalabilityCell> cells;  // ordered by (strip_width, t_p)
};

struct ScalabilityOptions {
  CircuitSpec family;
  std::vector<size_t> strip_widths;
  size_t n_circuits = 20;  // postselected quota
  size_t budget = 2000;
  nn::MinSamplesOptions samples;  // epsilon, n_test, train settings reused
  uint64_t base_seed = 1;
  size_t generation_cap = 1000000;
};

namespace detail {

// One strip trial: the model trains on trajectories of the width-w strip cut
// from the parent and is scored on parent trajectories cropped to the same
// sites. Parent window columns and strip sites agree by aligning the first
// kept parent site with the strip's start.
inline bool strip_decodes_parent(const CircuitInstance& parent, size_t t_p, size_t width,
                                 const ScalabilityOptions& opts) {
  size_t L = parent.num_sites;
  CircuitInstance sub = width == L ? parent : derive_subcircuit(parent, width);
  TrajectoryRecord sub_probe = run_trajectory(sub, 0, {.min_layers = 1});
  if (!sub_probe.purified()) {
    return false;
  }
  WindowSpec sub_window{sub.ref_site, width, t_p};
  Dataset train_ds = generate_dataset(sub, opts.budget, sub_window);

  size_t start = (parent.ref_site + L - width / 2) % L;
  WindowSpec parent_window{(start + (width - 1) / 2) % L, width, t_p};
  GenerateOptions gen;
  gen.first_trajectory_seed = opts.samples.test_first_seed;
  Dataset test_ds = generate_dataset(parent, opts.samples.n_test, parent_window, gen);

  uint64_t seed = hash_u64s({opts.base_seed, parent.spec.circuit_seed, width});
  nn::Cnn<float> model = nn::build_model<float>(t_p, width, opts.budget, seed);
  nn::TrainConfig tc = opts.samples.train;
  tc.seed = hash_u64s({seed, tag::kShuffle});
  auto images = nn::images_of<float>(train_ds);
  auto targets = nn::targets_of<float>(train_ds);
  nn::train(model, images, targets, tc);
  auto test_images = nn::images_of<float>(test_ds);
  nn::EvalReport rep =
      nn::evaluate(model, test_images, nn::labels_of(test_ds), opts.samples.epsilon);
  return rep.learned;
}

}  // namespace detail

// Circuits are postselected to be decodable from whole-circuit outcomes at
// the same budget before any strip is tried.
inline ScalabilityResult scalability_experiment(const ScalabilityOptions& opts) {
  if (opts.strip_widths.empty()) {
    throw std::invalid_argument("no strip widths requested");
  }
  for (size_t w : opts.strip_widths) {
    if (w > opts.family.L) {
      throw std::invalid_argument("strip width exceeds circuit size");
    }
  }

  ScalabilityResult res;
  res.p = opts.family.p;
  res.L = opts.family.L;
  res.T = opts.family.T;
  res.budget = opts.budget;

  struct Tally {
    size_t n = 0;
    size_t learned = 0;
  };
  std::vector<std::pair<std::pair<size_t, size_t>, Tally>> tallies;  // (width, t_p)
  auto tally_of = [&](size_t width, size_t t_p) -> Tally& {
    for (auto& [key, t] : tallies) {
      if (key.first == width && key.second == t_p) {
        return t;
      }
    }
    tallies.push_back({{width, t_p}, Tally{}});
    return tallies.back().second;
  };

  for (size_t c = 0; c < opts.generation_cap && res.n_postselected < opts.n_circuits; ++c) {
    CircuitSpec spec = opts.family;
    spec.circuit_seed = detail::circuit_seed_at(opts.base_seed, c);
    CircuitInstance inst = build_circuit(spec);
    TrajectoryRecord probe = run_trajectory(inst, 0, {.min_layers = 1});
    if (!probe.purified()) {
      continue;
    }
    WindowSpec whole{inst.ref_site, inst.num_sites, probe.t_p};
    nn::MinSamplesOptions so = opts.samples;
    so.grid = {opts.budget};
    so.model_seed = hash_u64s({opts.base_seed, spec.circuit_seed});
    if (!nn::min_training_samples(inst, whole, so).reached) {
      continue;
    }
    ++res.n_postselected;
    for (size_t w : opts.strip_widths) {
      Tally& t = tally_of(w, probe.t_p);
      ++t.n;
      if (detail::strip_decodes_parent(inst, probe.t_p, w, opts)) {
        ++t.learned;
      }
    }
  }
  if (res.n_postselected < opts.n_circuits) {
    throw std::runtime_error("insufficient learnable circuits within generation budget");
  }

  std::sort(tallies.begin(), tallies.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, t] : tallies) {
    ScalabilityCell cell;
    cell.strip_width = key.first;
    cell.t_p = key.second;
    cell.n_circuits = t.n;
    cell.n_learned = t.learned;
    cell.ratio = static_cast<double>(t.learned) / static_cast<double>(t.n);
    res.cells.push_back(cell);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Learnability reconstructed from the purification histogram and the mean
// complexity table, under a sharp learning threshold per purification time.

struct ReconstructionResult {
  std::vector<size_t> budgets;
  std::vector<double> predicted;  // R_l per budget
  bool monotonized = false;       // complexity table needed isotonic repair
  double purified_mass = 0.0;     // predicted limit at infinite budget
};

namespace detail {

// Pool-adjacent-violators fit, non-decreasing, unit weights.
inline std::vector<double> isotonic_non_decreasing(const std::vector<double>& v,
                                                   bool* changed) {
  std::vector<double> level;
  std::vector<size_t> count;
  for (double x : v) {
    level.push_back(x);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      double merged = (level[level.size() - 2] * static_cast<double>(count[count.size() - 2]) +
                       level.back() * static_cast<double>(count.back())) /
                      static_cast<double>(count[count.size() - 2] + count.back());
      count[count.size() - 2] += count.back();
      level[level.size() - 2] = merged;
      level.pop_back();
      count.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (size_t i = 0; i < level.size(); ++i) {
    out.insert(out.end(), count[i], level[i]);
  }
  if (changed != nullptr) {
    *changed = false;
    for (size_t i = 0; i < v.size(); ++i) {
      if (out[i] != v[i]) {
        *changed = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

// Predicted curve: a circuit purifying at layer t is learned exactly when the
// budget reaches the (monotone, linearly interpolated, edge-clamped) mean
// complexity at t, so each budget collects the histogram mass of all t whose
// threshold it meets.
inline ReconstructionResult reconstruct_learnability(
    const PurificationHistogram& hist, const std::vector<std::pair<size_t, double>>& m_table,
    const std::vector<size_t>& budgets) {
  if (m_table.empty()) {
    throw std::invalid_argument("empty complexity table");
  }
  std::vector<std::pair<size_t, double>> knots = m_table;
  std::sort(knots.begin(), knots.end());
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    if (knots[i].first == knots[i + 1].first) {
      throw std::invalid_argument("duplicate t_p in complexity table");
    }
  }

  ReconstructionResult res;
  res.budgets = budgets;
  std::vector<double> raw;
  raw.reserve(knots.size());
  for (const auto& [t, m] : knots) {
    raw.push_back(m);
  }
  std::vector<double> mono = detail::isotonic_non_decreasing(raw, &res.monotonized);

  auto threshold_at = [&](size_t t) {
    if (t <= knots.front().first) {
      return mono.front();
    }
    if (t >= knots.back().first) {
      return mono.back();
    }
    size_t i = 0;
    while (knots[i + 1].first < t) {
      ++i;
    }
    if (knots[i + 1].first == t) {
      return mono[i + 1];
    }
    double u = static_cast<double>(t - knots[i].first) /
               static_cast<double>(knots[i + 1].first - knots[i].first);
    return mono[i] + u * (mono[i + 1] - mono[i]);
  };

  for (double m : hist.mass) {
    res.purified_mass += m;
  }
  for (size_t budget : budgets) {
    double r = 0.0;
    for (size_t t = 1; t <= hist.mass.size(); ++t) {
      if (threshold_at(t) <= static_cast<double>(budget)) {
        r += hist.mass[t - 1];
      }
    }
    res.predicted.push_back(r);
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV emission. One writer per result type; headers name the result fields.

inline void write_csv(std::ostream& os, const std::vector<ComplexityResult>& results) {
  os << "p,L,t_p,window,n_circuits,M_values,M_bar,M_std,fail_fraction,flagged\n";
  for (const ComplexityResult& r : results) {
    os << detail::fmt(r.p) << ',' << r.L << ',' << r.t_p << ',' << to_string(r.window) << ','
       << r.m_values.size() << ',';
    for (size_t i = 0; i < r.m_values.size(); ++i) {
      os << (i == 0 ? "" : ";") << r.m_values[i];
    }
    os << ',' << detail::fmt(r.m_bar) << ',' << detail::fmt(r.m_std) << ','
       << detail::fmt(r.fail_fraction) << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

inline void write_csv(std::ostream& os, const LearnabilityCurve& curve) {
  os << "p,L,T,N_t,R_l\n";
  for (size_t k = 0; k < curve.budgets.size(); ++k) {
    os << detail::fmt(curve.p) << ',' << curve.L << ',' << curve.T << ',' << curve.budgets[k]
       << ',' << detail::fmt(curve.ratio[k]) << '\n';
  }
}

inline void write_csv(std::ostream& os, const std::vector<CoherentInfoSeries>& series) {
  os << "p,L,t,S_Q,S_Q_tilde\n";
  for (const CoherentInfoSeries& s : series) {
    for (size_t k = 0; k < s.t.size(); ++k) {
      os << detail::fmt(s.p) << ',' << s.L << ',' << s.t[k] << ',' << detail::fmt(s.s_q[k])
         << ',';
      if (!s.s_q_nn.empty()) {
        os << detail::fmt(s.s_q_nn[k]);
      }
      os << '\n';
    }
  }
}

inline void write_csv(std::ostream& os, const CrossingResult& res) {
  os << "tau_d,L,p,t_d,lambda,L_lambda,L_lambda_err,excluded\n";
  for (const LambdaPoint& pt : res.points) {
    os << detail::fmt(res.tau_d) << ',' << pt.L << ',' << detail::fmt(pt.p) << ',' << pt.t_d
       << ',';
    if (pt.valid) {
      os << detail::fmt(pt.lambda) << ',' << detail::fmt(pt.l_lambda) << ','
         << detail::fmt(pt.l_lambda_err) << ",0\n";
    } else {
      os << ",,,1\n";
    }
  }
}

inline void write_interval_csv(std::ostream& os, const CrossingResult& res) {
  os << "tau_d,found,p_lo,p_hi\n";
  os << detail::fmt(res.tau_d) << ',' << (res.crossing_found ? 1 : 0) << ',';
  if (res.crossing_found) {
    os << detail::fmt(res.p_lo) << ',' << detail::fmt(res.p_hi);
  } else {
    os << ',';
  }
  os << '\n';
}

inline void write_csv(std::ostream& os, const ScalabilityResult& res) {
  os << "p,L,T,N_t,L_B,t_p,n_circuits,n_learned,ratio\n";
  for (const ScalabilityCell& cell : res.cells) {
    os << detail::fmt(res.p) << ',' << res.L << ',' << res.T << ',' << res.budget << ','
       << cell.strip_width << ',' << cell.t_p << ',' << cell.n_circuits << ','
       << cell.n_learned << ',' << detail::fmt(cell.ratio) << '\n';
  }
}

inline void write_csv(std::ostream& os, const ReconstructionResult& res) {
  os << "N_t,R_l_predicted,monotonized\n";
  for (size_t k = 0; k < res.budgets.size(); ++k) {
    os << res.budgets[k] << ',' << detail::fmt(res.predicted[k]) << ','
       << (res.monotonized ? 1 : 0) << '\n';
  }
}

inline void write_csv(std::ostream& os, const PurificationHistogram& hist,
                      const CircuitSpec& family) {
  os << "p,L,T,n_circuits,t_p,mass\n";
  std::string prefix = detail::fmt(family.p) + ',' + std::to_string(family.L) + ',' +
                       std::to_string(family.T) + ',' + std::to_string(hist.circuits) + ',';
  for (size_t t = 1; t <= hist.mass.size(); ++t) {
    os << prefix << t << ',' << detail::fmt(hist.mass[t - 1]) << '\n';
  }
  os << prefix << "unpurified," << detail::fmt(hist.unpurified) << '\n';
}

}  // namespace mipt
