#include "mipt/tableau.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "mipt/bits.hpp"
#include "mipt/clifford.hpp"
#include "mipt/pauli.hpp"
#include "mipt/rng.hpp"
#include "support/dense_sim.hpp"

namespace {

using mipt::AffineSign;
using mipt::Axis;
using mipt::BitVec;
using mipt::ConcreteSign;
using mipt::SymbolicTableau;
using mipt::Tableau;

// The dense state must be a +1 eigenvector of every signed stabilizer row.
void expect_stabilized(const oracle::DenseSim& dense, const Tableau& tab) {
  for (size_t i = 0; i < tab.num_qubits(); ++i) {
    oracle::Mat m =
        oracle::pauli_matrix(tab.stabilizer_bits(i), tab.stabilizer_sign(i).negative);
    EXPECT_LT((m * dense.state() - dense.state()).norm(), 1e-9) << "row " << i;
  }
}

TEST(Tableau, InitialStateIsAllZeros) {
  Tableau t(3);
  oracle::DenseSim d(3);
  expect_stabilized(d, t);
  EXPECT_TRUE(t.check_invariants());
  for (size_t q = 0; q < 3; ++q) {
    auto r = t.measure_z(q, [] { return ConcreteSign{}; });
    EXPECT_TRUE(r.determined);
    EXPECT_FALSE(r.value.negative);
  }
}

TEST(Tableau, NamedGatesTrackDenseOracle) {
  Tableau t(3);
  oracle::DenseSim d(3);
  auto step = [&](auto&& fn) {
    fn();
    expect_stabilized(d, t);
    EXPECT_TRUE(t.check_invariants());
  };
  step([&] { t.h(0); d.h(0); });
  step([&] { t.s(0); d.s(0); });
  step([&] { t.cnot(0, 1); d.cnot(0, 1); });
  step([&] { t.sdg(1); d.sdg(1); });
  step([&] { t.cz(1, 2); d.cz(1, 2); });
  step([&] { t.x(2); d.x(2); });
  step([&] { t.z(0); d.z(0); });
  step([&] { t.h(2); d.h(2); });
  step([&] { t.cnot(2, 0); d.cnot(2, 0); });
}

TEST(Tableau, MeasurementOnComputationalStates) {
  Tableau t(2);
  t.x(0);
  auto r0 = t.measure_z(0, [] { return ConcreteSign{}; });
  EXPECT_TRUE(r0.determined);
  EXPECT_TRUE(r0.value.negative);
  auto r1 = t.measure_z(1, [] { return ConcreteSign{}; });
  EXPECT_TRUE(r1.determined);
  EXPECT_FALSE(r1.value.negative);
}

TEST(Tableau, UndeterminedMeasurementCollapsesAndRepeats) {
  for (bool forced : {false, true}) {
    Tableau t(2);
    t.h(0);
    t.cnot(0, 1);
    auto r = t.measure_z(0, [&] { return ConcreteSign{forced}; });
    EXPECT_FALSE(r.determined);
    EXPECT_EQ(r.value.negative, forced);
    // Repeat measurement is now determined, and the partner is correlated.
    auto r2 = t.measure_z(0, [] { return ConcreteSign{}; });
    EXPECT_TRUE(r2.determined);
    EXPECT_EQ(r2.value.negative, forced);
    auto r3 = t.measure_z(1, [] { return ConcreteSign{}; });
    EXPECT_TRUE(r3.determined);
    EXPECT_EQ(r3.value.negative, forced);
  }
}

TEST(Tableau, EntropyOnKnownStates) {
  Tableau t(4);
  EXPECT_EQ(t.subsystem_entropy({0}), 0u);
  t.h(0);
  t.cnot(0, 1);
  EXPECT_EQ(t.subsystem_entropy({0}), 1u);
  EXPECT_EQ(t.subsystem_entropy({0, 1}), 0u);
  EXPECT_EQ(t.subsystem_entropy({1, 2}), 1u);
  t.cnot(1, 2);  // GHZ on 0,1,2
  EXPECT_EQ(t.subsystem_entropy({0}), 1u);
  EXPECT_EQ(t.subsystem_entropy({0, 1}), 1u);
  EXPECT_EQ(t.subsystem_entropy({0, 1, 2}), 0u);
  EXPECT_EQ(t.subsystem_entropy({3}), 0u);
}

TEST(Tableau, SingleQubitElementReadsOffAxisAndSign) {
  Tableau t(3);
  auto e = t.element_on_single_qubit(1);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->axis, Axis::Z);
  EXPECT_FALSE(e->sign.negative);
  t.x(1);
  e = t.element_on_single_qubit(1);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->axis, Axis::Z);
  EXPECT_TRUE(e->sign.negative);
  t.h(1);
  e = t.element_on_single_qubit(1);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->axis, Axis::X);
  EXPECT_TRUE(e->sign.negative);
  t.h(2);
  t.cnot(2, 0);  // entangles (2,0); qubit 1 stays in its X eigenstate
  EXPECT_FALSE(t.element_on_single_qubit(0).has_value());
  EXPECT_FALSE(t.element_on_single_qubit(2).has_value());
  e = t.element_on_single_qubit(1);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(e->axis, Axis::X);
  EXPECT_TRUE(e->sign.negative);
}

// One recorded operation of the randomized driver.
struct Op {
  enum Kind { kGate, kMeasure } kind;
  size_t a = 0, b = 0;
  mipt::CliffordGate gate;
};

std::vector<Op> random_program(size_t n, size_t steps, uint64_t seed) {
  mipt::RandomStream stream(mipt::hash_u64s({seed, mipt::tag::kGate}));
  std::vector<Op> ops;
  for (size_t s = 0; s < steps; ++s) {
    if (stream.next_double() < 0.3) {
      ops.push_back({Op::kMeasure, stream.next_below(n), 0, mipt::CliffordGate()});
    } else {
      size_t a = stream.next_below(n);
      size_t b = stream.next_below(n - 1);
      if (b >= a) {
        ++b;
      }
      ops.push_back({Op::kGate, a, b, mipt::sample_random_clifford_2q(stream)});
    }
  }
  return ops;
}

TEST(Tableau, RandomCircuitsTrackDenseOracle) {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    size_t n = 2 + seed % 4;
    auto ops = random_program(n, 40, seed);
    Tableau t(n);
    oracle::DenseSim d(n);
    mipt::RandomStream coins(mipt::hash_u64s({seed, mipt::tag::kMeas}));
    std::vector<size_t> all_entropy_cut;
    for (const Op& op : ops) {
      if (op.kind == Op::kGate) {
        t.apply_gate(op.gate, op.a, op.b);
        d.apply_gate(op.gate, op.a, op.b);
      } else {
        double p0 = d.prob_zero(op.a);
        auto r = t.measure_z(op.a, [&] { return ConcreteSign{coins.next_bit()}; });
        if (r.determined) {
          EXPECT_NEAR(p0, r.value.negative ? 0.0 : 1.0, 1e-9);
        } else {
          EXPECT_NEAR(p0, 0.5, 1e-9);
        }
        d.collapse_z(op.a, r.value.negative);
      }
      expect_stabilized(d, t);
      ASSERT_TRUE(t.check_invariants());
    }
    // Entropies across a few subsets.
    mipt::RandomStream subs(mipt::hash_u64s({seed, 999}));
    for (int k = 0; k < 4; ++k) {
      std::vector<size_t> sites;
      for (size_t q = 0; q < n; ++q) {
        if (subs.next_bit()) {
          sites.push_back(q);
        }
      }
      if (sites.empty() || sites.size() == n) {
        continue;
      }
      EXPECT_EQ(t.subsystem_entropy(sites), d.schmidt_entropy(sites));
    }
  }
}

TEST(AffineSignAlgebra, VariablesXorAndEvaluate) {
  AffineSign a = AffineSign::variable(0);
  AffineSign b = AffineSign::variable(2);
  a ^= b;
  a.flip();
  BitVec assign(3);
  EXPECT_TRUE(a.evaluate(assign));  // 1 ^ 0 ^ 0
  assign.set(0, true);
  EXPECT_FALSE(a.evaluate(assign));
  assign.set(2, true);
  EXPECT_TRUE(a.evaluate(assign));
  EXPECT_FALSE(a.is_constant());
  EXPECT_TRUE(AffineSign{}.is_constant());
}

TEST(SymbolicTableau, BellPairGivesCorrelatedExpression) {
  SymbolicTableau t(2);
  size_t vars = 0;
  auto fresh = [&] { return AffineSign::variable(vars++); };
  t.h(0);
  t.cnot(0, 1);
  auto r0 = t.measure_z(0, fresh);
  EXPECT_FALSE(r0.determined);
  auto r1 = t.measure_z(1, fresh);
  ASSERT_TRUE(r1.determined);
  EXPECT_FALSE(r1.value.negative);
  ASSERT_EQ(r1.value.coeffs.set_bits(), std::vector<size_t>{0});
}

// Symbolic run evaluated at the concrete coin flips must reproduce the
// concrete run measurement for measurement: same determinism pattern, same
// outcome bits. This is the property the exact decoder is built on.
TEST(SymbolicTableau, EvaluatesToConcreteRun) {
  for (uint64_t seed = 100; seed < 112; ++seed) {
    size_t n = 2 + seed % 4;
    auto ops = random_program(n, 50, seed);
    Tableau ct(n);
    SymbolicTableau st(n);
    mipt::RandomStream coins(mipt::hash_u64s({seed, mipt::tag::kMeas}));
    BitVec assignment(1);
    size_t vars = 0;
    for (const Op& op : ops) {
      if (op.kind == Op::kGate) {
        ct.apply_gate(op.gate, op.a, op.b);
        st.apply_gate(op.gate, op.a, op.b);
        continue;
      }
      auto cr = ct.measure_z(op.a, [&] { return ConcreteSign{coins.next_bit()}; });
      auto sr = st.measure_z(op.a, [&] {
        AffineSign v = AffineSign::variable(vars++);
        return v;
      });
      ASSERT_EQ(cr.determined, sr.determined);
      if (!sr.determined) {
        assignment.ensure_size(vars);
        assignment.set(vars - 1, cr.value.negative);
      }
      EXPECT_EQ(sr.value.evaluate(assignment), cr.value.negative);
    }
    // Final stabilizer bits agree (signs differ only through evaluation).
    for (size_t i = 0; i < n; ++i) {
      EXPECT_EQ(ct.stabilizer_bits(i), st.stabilizer_bits(i));
      EXPECT_EQ(st.stabilizer_sign(i).evaluate(assignment),
                ct.stabilizer_sign(i).negative);
    }
  }
}

TEST(Tableau, GateInverseRestoresState) {
  mipt::RandomStream stream(mipt::hash_u64s({55, mipt::tag::kGate}));
  Tableau t(4);
  t.h(0);
  t.cnot(0, 2);
  t.s(3);
  Tableau before = t;
  for (int k = 0; k < 10; ++k) {
    mipt::CliffordGate g = mipt::sample_random_clifford_2q(stream);
    t.apply_gate(g, 1, 3);
    t.apply_gate(g.inverse(), 1, 3);
  }
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t.stabilizer_bits(i), before.stabilizer_bits(i));
    EXPECT_EQ(t.stabilizer_sign(i), before.stabilizer_sign(i));
    EXPECT_EQ(t.destabilizer_bits(i), before.destabilizer_bits(i));
  }
}

}  // namespace
