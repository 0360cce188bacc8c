#include "mipt/exact_decoder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <optional>
#include <vector>

#include "mipt/circuit.hpp"
#include "mipt/trajectory.hpp"

namespace {

using mipt::analyze_circuit;
using mipt::Axis;
using mipt::build_circuit;
using mipt::check_constraints;
using mipt::CircuitInstance;
using mipt::CircuitSpec;
using mipt::Dataset;
using mipt::generate_dataset;
using mipt::KeyMeasurementReport;
using mipt::OutcomeFn;
using mipt::predict;
using mipt::run_trajectory;
using mipt::TrajectoryRecord;
using mipt::WindowSpec;

CircuitInstance bell_probe_circuit(size_t L) {
  CircuitSpec spec = CircuitSpec::make(L, 2, 0.5, 999);
  CircuitInstance inst;
  inst.spec = spec;
  inst.num_sites = L;
  inst.ref_site = spec.ref_site;
  inst.layers.resize(2);
  inst.measure_sites.resize(2);
  inst.measure_sites[0].push_back(spec.ref_site);
  return inst;
}

std::optional<KeyMeasurementReport> try_analyze(const CircuitInstance& inst) {
  try {
    return analyze_circuit(inst);
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

TEST(AnalyzeCircuit, BellPartnerMeasurementIsTheKey) {
  CircuitInstance inst = bell_probe_circuit(8);
  KeyMeasurementReport rep = analyze_circuit(inst);
  EXPECT_EQ(rep.t_p, 1u);
  EXPECT_EQ(rep.axis, Axis::Z);
  ASSERT_EQ(rep.slots.size(), 1u);
  EXPECT_EQ(rep.slots[0].layer, 0u);
  EXPECT_EQ(rep.slots[0].site, 4u);
  EXPECT_EQ(rep.determined[0], 0);
  EXPECT_TRUE(rep.constraints.empty());
  ASSERT_EQ(rep.key_slots.size(), 1u);
  EXPECT_EQ(rep.key_slots[0], 0u);
  EXPECT_EQ(rep.c(), 1);
  // The prediction is the recorded outcome itself.
  for (uint64_t seed = 0; seed < 20; ++seed) {
    TrajectoryRecord rec = run_trajectory(inst, seed);
    EXPECT_EQ(predict(rep, outcomes_of(rec)), rec.label);
  }
}

TEST(AnalyzeCircuit, UnpurifiedCircuitThrows) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(8, 4, 0.0, 3));
  EXPECT_THROW(analyze_circuit(inst), std::runtime_error);
}

TEST(Predict, EmptyKeySetReturnsConstant) {
  KeyMeasurementReport rep;
  rep.ref_expr.negative = true;
  rep.t_p = 3;
  OutcomeFn never = [](size_t, size_t) -> int {
    ADD_FAILURE() << "no outcome should be consulted";
    return 0;
  };
  EXPECT_EQ(predict(rep, never), -1);
  rep.ref_expr.negative = false;
  EXPECT_EQ(predict(rep, never), 1);
}

TEST(ExactDecoder, ReplayMatchesEveryTrajectory) {
  size_t circuits = 0;
  for (uint64_t cs = 0; cs < 40 && circuits < 20; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(12, 12, 0.3, 7000 + cs));
    auto rep = try_analyze(inst);
    if (!rep) {
      continue;
    }
    ++circuits;
    EXPECT_FALSE(rep->key_slots.empty());
    for (uint64_t seed = 0; seed < 20; ++seed) {
      TrajectoryRecord rec = run_trajectory(inst, seed);
      ASSERT_TRUE(rec.purified());
      EXPECT_EQ(rec.t_p, rep->t_p);
      EXPECT_EQ(*rec.axis, rep->axis);
      OutcomeFn fn = outcomes_of(rec);
      EXPECT_EQ(predict(*rep, fn), rec.label);
      EXPECT_TRUE(check_constraints(*rep, fn));
    }
  }
  EXPECT_GE(circuits, 12u);
}

TEST(ExactDecoder, ReplayNearCriticality) {
  size_t circuits = 0;
  for (uint64_t cs = 0; cs < 30 && circuits < 5; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(12, 12, 0.2, 8100 + cs));
    auto rep = try_analyze(inst);
    if (!rep) {
      continue;
    }
    ++circuits;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      TrajectoryRecord rec = run_trajectory(inst, seed);
      EXPECT_EQ(predict(*rep, outcomes_of(rec)), rec.label);
      EXPECT_TRUE(check_constraints(*rep, outcomes_of(rec)));
    }
  }
  EXPECT_GE(circuits, 1u);
}

// Mutable copy of a record for bit-flip experiments.
struct Grid {
  size_t rows, cols;
  std::vector<int8_t> data;

  explicit Grid(const TrajectoryRecord& rec)
      : rows(rec.rows), cols(rec.cols), data(rec.outcomes) {}
  void flip(const mipt::MeasurementSlot& ms) {
    data[ms.layer * cols + ms.site] = static_cast<int8_t>(-data[ms.layer * cols + ms.site]);
  }
  OutcomeFn fn() const {
    return [this](size_t layer, size_t site) -> int {
      return layer < rows && site < cols ? data[layer * cols + site] : 0;
    };
  }
};

TEST(ExactDecoder, FlippingBitsChangesPredictionOnlyThroughKeySet) {
  size_t exercised = 0;
  for (uint64_t cs = 0; cs < 40 && exercised < 5; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(12, 10, 0.3, 4200 + cs));
    auto rep = try_analyze(inst);
    if (!rep || rep->constraints.empty()) {
      continue;
    }
    // Want an undetermined measurement outside the key set.
    std::optional<size_t> nonkey;
    for (size_t v = 0; v < rep->var_slot.size(); ++v) {
      if (std::find(rep->key_vars.begin(), rep->key_vars.end(), v) == rep->key_vars.end()) {
        nonkey = v;
        break;
      }
    }
    if (!nonkey || rep->key_slots.empty()) {
      continue;
    }
    ++exercised;
    TrajectoryRecord rec = run_trajectory(inst, 3);
    ASSERT_TRUE(rec.purified());

    Grid base(rec);
    EXPECT_EQ(predict(*rep, base.fn()), rec.label);
    EXPECT_TRUE(check_constraints(*rep, base.fn()));

    Grid key_flipped(rec);
    key_flipped.flip(rep->slots[rep->key_slots[0]]);
    EXPECT_EQ(predict(*rep, key_flipped.fn()), -rec.label);

    Grid nonkey_flipped(rec);
    nonkey_flipped.flip(rep->slots[rep->var_slot[*nonkey]]);
    EXPECT_EQ(predict(*rep, nonkey_flipped.fn()), rec.label);

    Grid constraint_broken(rec);
    constraint_broken.flip(rep->slots[rep->constraints[0].first]);
    EXPECT_FALSE(check_constraints(*rep, constraint_broken.fn()));
  }
  EXPECT_EQ(exercised, 5u);
}

TEST(ExactDecoder, WindowedDatasetPredictsWhenDeepEnough) {
  size_t exercised = 0;
  for (uint64_t cs = 0; cs < 40 && exercised < 4; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(12, 10, 0.3, 6300 + cs));
    auto rep = try_analyze(inst);
    if (!rep || rep->t_p < 2) {
      continue;
    }
    ++exercised;
    // Full width keeps every site visible; depth t_p covers every key layer.
    WindowSpec enough{inst.ref_site, inst.num_sites, rep->t_p};
    Dataset ds = generate_dataset(inst, 15, enough);
    for (const auto& r : ds.records) {
      OutcomeFn fn = outcomes_of(ds, r);
      EXPECT_EQ(predict(*rep, fn), r.label);
      EXPECT_TRUE(check_constraints(*rep, fn));
    }
    // One layer shallower always hides the purifying measurement.
    WindowSpec shallow{inst.ref_site, inst.num_sites, rep->t_p - 1};
    Dataset thin = generate_dataset(inst, 3, shallow);
    EXPECT_THROW(predict(*rep, outcomes_of(thin, thin.records[0])), std::runtime_error);
  }
  EXPECT_EQ(exercised, 4u);
}

// A measurement's outcome can influence the reference whenever its backward
// cone meets the partner's, so exact key sets occasionally reach distance
// 2*t_p from the center. Strip decoding is therefore a per-circuit statistical
// statement: for shallow purification and a wide enough strip, the strip
// report reproduces the parent's label on almost every circuit.
TEST(ExactDecoder, StripReportUsuallyAgreesWithParent) {
  size_t eligible = 0;
  size_t agree = 0;
  for (uint64_t cs = 0; cs < 200 && eligible < 25; ++cs) {
    CircuitInstance parent = build_circuit(CircuitSpec::make(16, 16, 0.3, 9500 + cs));
    auto parent_rep = try_analyze(parent);
    if (!parent_rep || parent_rep->t_p > 2) {
      continue;
    }
    ++eligible;
    size_t L = parent.num_sites;
    size_t w = 8;
    CircuitInstance sub = derive_subcircuit(parent, w);
    auto sub_rep = try_analyze(sub);
    if (!sub_rep || sub_rep->axis != parent_rep->axis || sub_rep->t_p != parent_rep->t_p) {
      continue;
    }
    size_t start = (parent.ref_site + L - w / 2) % L;
    bool all_match = true;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      TrajectoryRecord rec = run_trajectory(parent, seed);
      OutcomeFn strip_view = [&](size_t layer, size_t site) -> int {
        return rec.at(layer, (start + site) % L);
      };
      if (predict(*sub_rep, strip_view) != rec.label) {
        all_match = false;
        break;
      }
    }
    agree += all_match;
  }
  ASSERT_GE(eligible, 20u);
  EXPECT_GE(static_cast<double>(agree), 0.9 * static_cast<double>(eligible));
}

}  // namespace
