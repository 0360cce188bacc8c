#include "mipt/pauli.hpp"

#include <gtest/gtest.h>

#include <complex>

#include "mipt/rng.hpp"
#include "support/dense_sim.hpp"

namespace {

using mipt::Axis;
using mipt::PauliBits;

PauliBits from_code(unsigned code, size_t n) {
  // Two bits per site: (x, z).
  PauliBits p(n);
  for (size_t q = 0; q < n; ++q) {
    p.x.set(q, (code >> (2 * q)) & 1);
    p.z.set(q, (code >> (2 * q + 1)) & 1);
  }
  return p;
}

TEST(Axis, LetterRoundTrip) {
  EXPECT_EQ(mipt::axis_letter(Axis::X), 'X');
  EXPECT_EQ(mipt::axis_letter(Axis::Y), 'Y');
  EXPECT_EQ(mipt::axis_letter(Axis::Z), 'Z');
  EXPECT_EQ(mipt::axis_from_letter('X'), Axis::X);
  EXPECT_EQ(mipt::axis_from_letter('Y'), Axis::Y);
  EXPECT_EQ(mipt::axis_from_letter('Z'), Axis::Z);
  EXPECT_THROW(mipt::axis_from_letter('Q'), std::invalid_argument);
}

TEST(PauliBitsBasics, AxisAccess) {
  PauliBits p(3);
  EXPECT_TRUE(p.is_identity());
  p.set_axis(0, Axis::X);
  p.set_axis(1, Axis::Y);
  p.set_axis(2, Axis::Z);
  EXPECT_FALSE(p.is_identity());
  EXPECT_EQ(p.axis_at(0), Axis::X);
  EXPECT_EQ(p.axis_at(1), Axis::Y);
  EXPECT_EQ(p.axis_at(2), Axis::Z);
  PauliBits id(2);
  EXPECT_THROW(id.axis_at(0), std::logic_error);
}

// Product phase against literal matrix multiplication: A*B must equal
// i^e * C where C is the canonical Pauli with the xored bits.
void check_product_phase(const PauliBits& a, const PauliBits& b) {
  int e = mipt::mul_phase_exponent(a, b);
  ASSERT_GE(e, 0);
  ASSERT_LT(e, 4);
  oracle::Mat ma = oracle::pauli_matrix(a);
  oracle::Mat mb = oracle::pauli_matrix(b);
  PauliBits c = a;
  c ^= b;
  oracle::Mat mc = oracle::pauli_matrix(c);
  std::complex<double> phase = std::pow(std::complex<double>(0, 1), e);
  EXPECT_LT((ma * mb - phase * mc).norm(), 1e-12)
      << "products disagree at exponent " << e;
}

TEST(PauliProduct, PhaseMatchesMatrixOracleAllOneSitePairs) {
  for (unsigned a = 0; a < 4; ++a) {
    for (unsigned b = 0; b < 4; ++b) {
      check_product_phase(from_code(a, 1), from_code(b, 1));
    }
  }
}

TEST(PauliProduct, PhaseMatchesMatrixOracleAllTwoSitePairs) {
  for (unsigned a = 0; a < 16; ++a) {
    for (unsigned b = 0; b < 16; ++b) {
      check_product_phase(from_code(a, 2), from_code(b, 2));
    }
  }
}

TEST(PauliProduct, PhaseMatchesMatrixOracleRandomThreeSitePairs) {
  mipt::RandomStream stream(mipt::hash_u64s({2024, 3}));
  for (int t = 0; t < 200; ++t) {
    unsigned a = static_cast<unsigned>(stream.next_below(64));
    unsigned b = static_cast<unsigned>(stream.next_below(64));
    check_product_phase(from_code(a, 3), from_code(b, 3));
  }
}

TEST(PauliCommutation, MatchesMatrixOracle) {
  for (unsigned a = 0; a < 16; ++a) {
    for (unsigned b = 0; b < 16; ++b) {
      PauliBits pa = from_code(a, 2), pb = from_code(b, 2);
      oracle::Mat ma = oracle::pauli_matrix(pa);
      oracle::Mat mb = oracle::pauli_matrix(pb);
      bool anti = (ma * mb + mb * ma).norm() < 1e-12;
      if (a == 0 || b == 0) {
        anti = false;
      }
      EXPECT_EQ(mipt::anticommutes(pa, pb), anti) << "codes " << a << "," << b;
    }
  }
}

TEST(PauliProduct, PhaseHandlesManyWordOperands) {
  // Sites past word 0 must contribute to the phase count.
  PauliBits a(70), b(70);
  a.set_axis(69, Axis::X);
  b.set_axis(69, Axis::Y);
  // X*Y = iZ on that site.
  EXPECT_EQ(mipt::mul_phase_exponent(a, b), 1);
  a.set_axis(3, Axis::Z);
  b.set_axis(3, Axis::Y);
  // Z*Y = -iX contributes -1; total 0.
  EXPECT_EQ(mipt::mul_phase_exponent(a, b), 0);
}

}  // namespace
