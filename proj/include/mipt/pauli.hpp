// Sign-free Pauli strings as paired X/Z bit vectors, plus the phase
// arithmetic needed to multiply signed Paulis.
//
// A site with bits (x, z) carries I, X, Z or Y for (0,0), (1,0), (0,1),
// (1,1); Y is the literal Hermitian Pauli, so products of rows are tracked
// with powers of i that always come out real for stabilizer rows.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "mipt/bits.hpp"

namespace mipt {

enum class Axis : uint8_t { X = 0, Y = 1, Z = 2 };

inline char axis_letter(Axis a) { return a == Axis::X ? 'X' : (a == Axis::Y ? 'Y' : 'Z'); }

inline Axis axis_from_letter(char c) {
  switch (c) {
    case 'X':
      return Axis::X;
    case 'Y':
      return Axis::Y;
    case 'Z':
      return Axis::Z;
    default:
      throw std::invalid_argument(std::string("not a Pauli axis: ") + c);
  }
}

struct PauliBits {
  BitVec x;
  BitVec z;

  PauliBits() = default;
  explicit PauliBits(size_t n) : x(n), z(n) {}

  size_t num_qubits() const { return x.size(); }

  bool is_identity() const { return x.is_zero() && z.is_zero(); }

  Axis axis_at(size_t q) const {
    bool xb = x.get(q), zb = z.get(q);
    if (xb && zb) {
      return Axis::Y;
    }
    if (xb) {
      return Axis::X;
    }
    if (zb) {
      return Axis::Z;
    }
    throw std::logic_error("axis_at on identity site");
  }

  void set_axis(size_t q, Axis a) {
    x.set(q, a != Axis::Z);
    z.set(q, a != Axis::X);
  }

  PauliBits& operator^=(const PauliBits& o) {
    x ^= o.x;
    z ^= o.z;
    return *this;
  }

  bool operator==(const PauliBits& o) const { return x == o.x && z == o.z; }
};

// Symplectic product: 1 iff the two Paulis anticommute.
inline bool anticommutes(const PauliBits& a, const PauliBits& b) {
  return BitVec::dot(a.x, b.z) ^ BitVec::dot(a.z, b.x);
}

// Power of i picked up when forming the site-wise product a*b, with both
// operands and the result written in the I/X/Y/Z convention. The per-site
// contribution g(a, b) is in {-1, 0, +1}; this returns the sum mod 4, counted
// word-parallel with popcounts.
inline int mul_phase_exponent(const PauliBits& a, const PauliBits& b) {
  long plus = 0, minus = 0;
  size_t nw = a.x.num_words();
  for (size_t w = 0; w < nw; ++w) {
    uint64_t x1 = a.x.word(w), z1 = a.z.word(w);
    uint64_t x2 = b.x.word(w), z2 = b.z.word(w);
    uint64_t y1 = x1 & z1;          // left site is Y
    uint64_t xo1 = x1 & ~z1;        // left site is X
    uint64_t zo1 = ~x1 & z1;        // left site is Z
    uint64_t p = (y1 & z2 & ~x2) | (xo1 & x2 & z2) | (zo1 & x2 & ~z2);
    uint64_t m = (y1 & x2 & ~z2) | (xo1 & z2 & ~x2) | (zo1 & x2 & z2);
    plus += std::popcount(p);
    minus += std::popcount(m);
  }
  return static_cast<int>(((plus - minus) % 4 + 4) % 4);
}

}  // namespace mipt
