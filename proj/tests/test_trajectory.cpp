#include "mipt/trajectory.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "mipt/circuit.hpp"
#include "mipt/rng.hpp"

namespace {

using mipt::Axis;
using mipt::build_circuit;
using mipt::CircuitInstance;
using mipt::CircuitSpec;
using mipt::Dataset;
using mipt::generate_dataset;
using mipt::lightcone_window;
using mipt::read_dataset;
using mipt::run_trajectory;
using mipt::TrajectoryRecord;
using mipt::WindowSpec;

// First circuit at or after seed0 whose trajectory 0 purifies within depth T.
CircuitInstance find_purifying_circuit(size_t L, size_t T, double p, uint64_t seed0) {
  for (uint64_t s = seed0; s < seed0 + 64; ++s) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(L, T, p, s));
    if (run_trajectory(inst, 0).purified()) {
      return inst;
    }
  }
  throw std::runtime_error("no purifying circuit found near seed");
}

TEST(RunTrajectory, NoMeasurementsNeverPurifies) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(8, 6, 0.0, 4));
  TrajectoryRecord rec = run_trajectory(inst, 1);
  EXPECT_FALSE(rec.purified());
  EXPECT_EQ(rec.label, 0);
  EXPECT_FALSE(rec.axis.has_value());
  for (int8_t v : rec.outcomes) {
    EXPECT_EQ(v, 0);
  }
}

TEST(RunTrajectory, FullMeasurementPurifiesImmediately) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(4, 4, 1.0, 6));
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    TrajectoryRecord rec = run_trajectory(inst, seed, {.min_layers = 2});
    ASSERT_TRUE(rec.purified());
    ASSERT_LE(rec.t_p, 2u);
    for (size_t layer = 0; layer < rec.rows; ++layer) {
      for (size_t site = 0; site < rec.cols; ++site) {
        EXPECT_NE(rec.at(layer, site), 0);
      }
    }
  }
}

TEST(RunTrajectory, DeterministicPerSeeds) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(12, 8, 0.3, 17));
  TrajectoryRecord a = run_trajectory(inst, 5);
  TrajectoryRecord b = run_trajectory(inst, 5);
  TrajectoryRecord c = run_trajectory(inst, 6);
  EXPECT_EQ(a.outcomes, b.outcomes);
  EXPECT_EQ(a.t_p, b.t_p);
  EXPECT_EQ(a.label, b.label);
  EXPECT_NE(a.outcomes, c.outcomes);
}

TEST(RunTrajectory, PurificationTimeAndAxisAreCircuitIntrinsic) {
  size_t checked = 0;
  for (uint64_t cs = 0; cs < 12; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(8, 8, 0.4, 1000 + cs));
    TrajectoryRecord first = run_trajectory(inst, 0);
    for (uint64_t seed = 1; seed < 40; ++seed) {
      TrajectoryRecord rec = run_trajectory(inst, seed);
      EXPECT_EQ(rec.t_p, first.t_p);
      EXPECT_EQ(rec.axis.has_value(), first.axis.has_value());
      if (rec.axis && first.axis) {
        EXPECT_EQ(*rec.axis, *first.axis);
      }
    }
    if (first.purified()) {
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(RunTrajectory, ReferenceEntropyIsMonotone) {
  using mipt::ConcreteSign;
  using mipt::RandomStream;
  using mipt::Tableau;
  for (uint64_t cs = 0; cs < 6; ++cs) {
    CircuitInstance inst = build_circuit(CircuitSpec::make(10, 10, 0.25, 500 + cs));
    Tableau t(inst.num_qubits());
    prepare_initial_state(inst, t);
    RandomStream coins(mipt::hash_u64s({inst.spec.circuit_seed, 0, mipt::tag::kTraj}));
    size_t prev = t.subsystem_entropy({inst.ref_index()});
    EXPECT_EQ(prev, 1u);
    for (size_t layer = 0; layer < inst.depth(); ++layer) {
      for (const auto& g : inst.layers[layer]) {
        t.apply_gate(g.gate, g.a, g.b);
      }
      for (size_t site : inst.measure_sites[layer]) {
        t.measure_z(site, [&] { return ConcreteSign{coins.next_bit()}; });
        size_t s = t.subsystem_entropy({inst.ref_index()});
        EXPECT_LE(s, prev);
        prev = s;
      }
    }
  }
}

TEST(LightconeWindow, FormulaAndClamp) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(32, 10, 0.3, 2));
  WindowSpec w1 = lightcone_window(inst, 1);
  EXPECT_EQ(w1.center, 16u);
  EXPECT_EQ(w1.width, 4u);
  EXPECT_EQ(w1.depth, 1u);
  WindowSpec wbig = lightcone_window(inst, 40);
  EXPECT_EQ(wbig.width, 32u);
  EXPECT_EQ(wbig.depth, 40u);
}

TEST(WindowSpecGeometry, WrapsPeriodically) {
  WindowSpec w{1, 4, 2};  // sites 0,1,2,3 shifted: first = 1 - 1 = 0
  EXPECT_EQ(w.first_site(8), 0u);
  WindowSpec w2{0, 4, 2};
  EXPECT_EQ(w2.first_site(8), 7u);
  EXPECT_TRUE(w2.contains_site(7, 8));
  EXPECT_TRUE(w2.contains_site(0, 8));
  EXPECT_TRUE(w2.contains_site(2, 8));
  EXPECT_FALSE(w2.contains_site(3, 8));
  EXPECT_EQ(w2.column_of(7, 8), 0u);
  EXPECT_EQ(w2.column_of(2, 8), 3u);
  // Full width never rotates.
  WindowSpec full{5, 8, 2};
  EXPECT_EQ(full.first_site(8), 0u);
}

CircuitInstance bell_probe_circuit(size_t L, size_t layers_without_gates) {
  // Hand-built instance: no gates at all; the reference's partner is measured
  // in round 1, so the single undetermined outcome is the label.
  CircuitSpec spec = CircuitSpec::make(L, layers_without_gates, 0.5, 999);
  CircuitInstance inst;
  inst.spec = spec;
  inst.num_sites = L;
  inst.ref_site = spec.ref_site;
  inst.layers.resize(layers_without_gates);
  inst.measure_sites.resize(layers_without_gates);
  inst.measure_sites[0].push_back(spec.ref_site);
  return inst;
}

TEST(GenerateDataset, BellPartnerLabelEqualsOutcome) {
  CircuitInstance inst = bell_probe_circuit(8, 2);
  Dataset ds = generate_dataset(inst, 64, WindowSpec{4, 4, 1});
  EXPECT_EQ(ds.axis, Axis::Z);
  size_t plus = 0;
  for (const auto& r : ds.records) {
    // Window columns cover sites 3,4,5,6; partner site 4 is column 1.
    EXPECT_EQ(r.label, r.outcomes[1]);
    plus += r.label > 0;
  }
  // Outcomes are fair coin flips.
  EXPECT_GT(plus, 16u);
  EXPECT_LT(plus, 48u);
}

TEST(GenerateDataset, UnpurifiedCircuitRejectedUnlessForced) {
  CircuitInstance inst = build_circuit(CircuitSpec::make(8, 4, 0.0, 12));
  EXPECT_THROW(generate_dataset(inst, 4, std::nullopt), std::runtime_error);
  mipt::GenerateOptions opts;
  opts.force_random_labels = true;
  Dataset ds = generate_dataset(inst, 200, std::nullopt, opts);
  size_t plus = 0;
  for (const auto& r : ds.records) {
    ASSERT_TRUE(r.label == 1 || r.label == -1);
    plus += r.label > 0;
  }
  EXPECT_GT(plus, 60u);
  EXPECT_LT(plus, 140u);
}

TEST(GenerateDataset, FullWindowEqualsNoWindow) {
  CircuitInstance inst = find_purifying_circuit(8, 6, 0.4, 31);
  Dataset plain = generate_dataset(inst, 10, std::nullopt);
  Dataset windowed = generate_dataset(inst, 10, WindowSpec{4, 8, 6});
  for (size_t i = 0; i < plain.records.size(); ++i) {
    EXPECT_EQ(plain.records[i].outcomes, windowed.records[i].outcomes);
    EXPECT_EQ(plain.records[i].label, windowed.records[i].label);
  }
}

TEST(DatasetIo, RoundTripIsByteIdentical) {
  CircuitInstance inst = find_purifying_circuit(8, 6, 0.4, 31);
  Dataset ds = generate_dataset(inst, 25, lightcone_window(inst, 3));
  std::ostringstream first;
  write_dataset(first, ds);
  std::istringstream in(first.str());
  Dataset back = read_dataset(in);
  std::ostringstream second;
  write_dataset(second, back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(back.records.size(), ds.records.size());
  EXPECT_EQ(back.axis, ds.axis);
  ASSERT_TRUE(back.window.has_value());
  EXPECT_EQ(back.window->width, ds.window->width);
}

TEST(DatasetIo, FileSizeIsExact) {
  CircuitInstance inst = bell_probe_circuit(8, 2);
  Dataset ds = generate_dataset(inst, 100, std::nullopt);
  std::ostringstream os;
  write_dataset(os, ds);
  // header 45 bytes; each record 8*2 outcome bytes + 1 label + 8 seed.
  EXPECT_EQ(os.str().size(), 45u + 100u * (16u + 1u + 8u));
}

TEST(DatasetIo, BadMagicAndVersionRejected) {
  CircuitInstance inst = bell_probe_circuit(8, 2);
  Dataset ds = generate_dataset(inst, 2, std::nullopt);
  std::ostringstream os;
  write_dataset(os, ds);
  std::string buf = os.str();
  std::string corrupt = buf;
  corrupt[0] = 'X';
  std::istringstream bad(corrupt);
  EXPECT_THROW(read_dataset(bad), std::runtime_error);
  corrupt = buf;
  corrupt[8] = 9;  // version low byte
  std::istringstream badv(corrupt);
  EXPECT_THROW(read_dataset(badv), std::runtime_error);
  std::string truncated = buf.substr(0, buf.size() - 3);
  std::istringstream badt(truncated);
  EXPECT_THROW(read_dataset(badt), std::runtime_error);
}

TEST(PurificationHistogram, MassSumsToOneAndExtremes) {
  CircuitSpec family = CircuitSpec::make(8, 6, 0.0, 0);
  auto h0 = purification_histogram(family, 50, uint64_t{7});
  EXPECT_DOUBLE_EQ(h0.unpurified, 1.0);
  family.p = 0.5;
  auto h = purification_histogram(family, 200, uint64_t{7});
  double total = h.unpurified;
  for (double m : h.mass) {
    total += m;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Deep in the pure phase almost everything purifies quickly.
  EXPECT_LT(h.unpurified, 0.1);
}

}  // namespace
