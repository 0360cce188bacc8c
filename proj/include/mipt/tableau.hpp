// Stabilizer tableau with destabilizer rows, templated on the sign type so
// the same update rules drive both concrete simulation (signs are bits) and
// symbolic simulation (signs are affine forms over measurement variables).
//
// Rows [0, n) are destabilizers, rows [n, 2n) are stabilizers. Destabilizer
// signs are never read, so only stabilizer rows carry a Sign.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mipt/bits.hpp"
#include "mipt/clifford.hpp"
#include "mipt/pauli.hpp"

namespace mipt {

// Plain sign bit: negative means the row is -P.
struct ConcreteSign {
  bool negative = false;

  ConcreteSign& operator^=(const ConcreteSign& o) {
    negative ^= o.negative;
    return *this;
  }
  void flip() { negative = !negative; }
  bool operator==(const ConcreteSign& o) const { return negative == o.negative; }
};

// Sign as an affine form c + sum_j coeffs[j] * m_j over GF(2), where m_j are
// the outcome bits of undetermined measurements, numbered in the order the
// simulation introduced them.
struct AffineSign {
  bool negative = false;
  BitVec coeffs{0};

  static AffineSign variable(size_t index) {
    AffineSign s;
    s.coeffs = BitVec(index + 1);
    s.coeffs.set(index, true);
    return s;
  }

  AffineSign& operator^=(const AffineSign& o) {
    negative ^= o.negative;
    coeffs ^= o.coeffs;
    return *this;
  }
  void flip() { negative = !negative; }
  bool operator==(const AffineSign& o) const {
    return negative == o.negative && coeffs == o.coeffs;
  }

  bool is_constant() const { return coeffs.is_zero(); }

  // Evaluate at a concrete assignment of measurement variables.
  bool evaluate(const BitVec& assignment) const {
    return negative ^ BitVec::dot(coeffs, assignment);
  }
};

template <class Sign>
struct MeasureResult {
  bool determined = false;
  Sign value{};  // outcome bit: 0 means +1 eigenvalue, 1 means -1
};

template <class Sign>
class BasicTableau {
 public:
  explicit BasicTableau(size_t n) : n_(n), signs_(n) {
    if (n == 0) {
      throw std::invalid_argument("tableau needs at least one qubit");
    }
    rows_.reserve(2 * n);
    for (size_t i = 0; i < 2 * n; ++i) {
      rows_.emplace_back(n);
    }
    for (size_t i = 0; i < n; ++i) {
      rows_[i].x.set(i, true);       // destabilizer X_i
      rows_[n + i].z.set(i, true);   // stabilizer Z_i
    }
  }

  size_t num_qubits() const { return n_; }

  const PauliBits& stabilizer_bits(size_t i) const { return rows_[n_ + i]; }
  const Sign& stabilizer_sign(size_t i) const { return signs_[i]; }
  const PauliBits& destabilizer_bits(size_t i) const { return rows_[i]; }

  void h(size_t q) {
    for (size_t i = 0; i < 2 * n_; ++i) {
      bool x = rows_[i].x.get(q), z = rows_[i].z.get(q);
      if (x && z && i >= n_) {
        signs_[i - n_].flip();
      }
      rows_[i].x.set(q, z);
      rows_[i].z.set(q, x);
    }
  }

  void s(size_t q) {
    for (size_t i = 0; i < 2 * n_; ++i) {
      bool x = rows_[i].x.get(q), z = rows_[i].z.get(q);
      if (x && z && i >= n_) {
        signs_[i - n_].flip();
      }
      rows_[i].z.set(q, z ^ x);
    }
  }

  void sdg(size_t q) {
    for (size_t i = 0; i < 2 * n_; ++i) {
      bool x = rows_[i].x.get(q), z = rows_[i].z.get(q);
      if (x && !z && i >= n_) {
        signs_[i - n_].flip();
      }
      rows_[i].z.set(q, z ^ x);
    }
  }

  void x(size_t q) {
    for (size_t i = n_; i < 2 * n_; ++i) {
      if (rows_[i].z.get(q)) {
        signs_[i - n_].flip();
      }
    }
  }

  void z(size_t q) {
    for (size_t i = n_; i < 2 * n_; ++i) {
      if (rows_[i].x.get(q)) {
        signs_[i - n_].flip();
      }
    }
  }

  void cnot(size_t c, size_t t) {
    for (size_t i = 0; i < 2 * n_; ++i) {
      bool xc = rows_[i].x.get(c), zc = rows_[i].z.get(c);
      bool xt = rows_[i].x.get(t), zt = rows_[i].z.get(t);
      if (i >= n_ && xc && zt && (xt == zc)) {
        signs_[i - n_].flip();
      }
      rows_[i].x.set(t, xt ^ xc);
      rows_[i].z.set(c, zc ^ zt);
    }
  }

  void cz(size_t a, size_t b) {
    for (size_t i = 0; i < 2 * n_; ++i) {
      bool xa = rows_[i].x.get(a), za = rows_[i].z.get(a);
      bool xb = rows_[i].x.get(b), zb = rows_[i].z.get(b);
      if (i >= n_ && xa && xb && (za != zb)) {
        signs_[i - n_].flip();
      }
      rows_[i].z.set(a, za ^ xb);
      rows_[i].z.set(b, zb ^ xa);
    }
  }

  void apply_gate(const CliffordGate& gate, size_t a) {
    if (gate.arity() != 1) {
      throw std::invalid_argument("gate arity does not match one site");
    }
    for (size_t i = 0; i < 2 * n_; ++i) {
      unsigned p = pack1(rows_[i], a);
      if (p == 0) {
        continue;
      }
      GateAction act = gate.action(p);
      unpack1(rows_[i], a, act.bits);
      if (act.flip && i >= n_) {
        signs_[i - n_].flip();
      }
    }
  }

  void apply_gate(const CliffordGate& gate, size_t a, size_t b) {
    if (gate.arity() != 2) {
      throw std::invalid_argument("gate arity does not match two sites");
    }
    if (a == b || a >= n_ || b >= n_) {
      throw std::invalid_argument("gate sites must be distinct and in range");
    }
    for (size_t i = 0; i < 2 * n_; ++i) {
      unsigned p = pack2(rows_[i], a, b);
      if (p == 0) {
        continue;
      }
      GateAction act = gate.action(p);
      unpack2(rows_[i], a, b, act.bits);
      if (act.flip && i >= n_) {
        signs_[i - n_].flip();
      }
    }
  }

  // Measure Z on qubit q. fresh() supplies the outcome sign when the result
  // is undetermined (a random bit concretely, a new variable symbolically).
  template <class Fresh>
  MeasureResult<Sign> measure_z(size_t q, Fresh&& fresh) {
    size_t pivot = 2 * n_;
    for (size_t i = n_; i < 2 * n_; ++i) {
      if (rows_[i].x.get(q)) {
        pivot = i;
        break;
      }
    }
    if (pivot < 2 * n_) {
      for (size_t i = 0; i < 2 * n_; ++i) {
        if (i != pivot && rows_[i].x.get(q)) {
          accumulate(i, pivot);
        }
      }
      rows_[pivot - n_] = rows_[pivot];
      rows_[pivot].x.clear();
      rows_[pivot].z.clear();
      rows_[pivot].z.set(q, true);
      Sign outcome = fresh();
      signs_[pivot - n_] = outcome;
      return {false, outcome};
    }
    // Deterministic: the outcome sign is the sign of the stabilizer element
    // prod_{i: destab_i hits q} S_i, which multiplies out to Z_q.
    PauliBits acc(n_);
    Sign value{};
    int expo = 0;
    for (size_t i = 0; i < n_; ++i) {
      if (rows_[i].x.get(q)) {
        expo = (expo + mul_phase_exponent(acc, rows_[n_ + i])) & 3;
        acc ^= rows_[n_ + i];
        value ^= signs_[i];
      }
    }
    if (expo & 1) {
      throw std::logic_error("deterministic outcome with imaginary phase");
    }
    if (expo == 2) {
      value.flip();
    }
    if (!(acc.x.is_zero() && acc.z.popcount() == 1 && acc.z.get(q))) {
      throw std::logic_error("deterministic outcome did not reduce to Z");
    }
    return {true, value};
  }

  // Entanglement entropy (bits) of the qubits in `sites`:
  // rank over GF(2) of the stabilizer generators restricted to A, minus |A|.
  size_t subsystem_entropy(const std::vector<size_t>& sites) const {
    std::vector<BitVec> restricted;
    restricted.reserve(n_);
    for (size_t i = 0; i < n_; ++i) {
      restricted.push_back(restrict_row(rows_[n_ + i], sites));
    }
    size_t r = gf2_rank_inplace(restricted);
    if (r < sites.size()) {
      throw std::logic_error("restricted stabilizer rank below subsystem size");
    }
    return r - sites.size();
  }

  // The unique nonidentity stabilizer element supported only on qubit `r`,
  // if one exists (i.e. the qubit is unentangled with the rest).
  struct LocalElement {
    Axis axis;
    Sign sign;  // outcome-bit convention: set means the element is -P
  };
  std::optional<LocalElement> element_on_single_qubit(size_t r) const {
    std::vector<size_t> others;
    others.reserve(n_ - 1);
    for (size_t q = 0; q < n_; ++q) {
      if (q != r) {
        others.push_back(q);
      }
    }
    std::vector<BitVec> rows;
    std::vector<BitVec> combos;
    rows.reserve(n_);
    combos.reserve(n_);
    for (size_t i = 0; i < n_; ++i) {
      rows.push_back(restrict_row(rows_[n_ + i], others));
      BitVec c(n_);
      c.set(i, true);
      combos.push_back(std::move(c));
    }
    std::vector<BitVec> kernel;
    eliminate_tracking(rows, combos, kernel);
    if (kernel.empty()) {
      return std::nullopt;
    }
    if (kernel.size() > 1) {
      throw std::logic_error("single qubit cannot carry two independent stabilizers");
    }
    PauliBits acc(n_);
    Sign sign{};
    int expo = 0;
    for (size_t i : kernel[0].set_bits()) {
      expo = (expo + mul_phase_exponent(acc, rows_[n_ + i])) & 3;
      acc ^= rows_[n_ + i];
      sign ^= signs_[i];
    }
    if (expo & 1) {
      throw std::logic_error("local element with imaginary phase");
    }
    if (expo == 2) {
      sign.flip();
    }
    if (acc.is_identity()) {
      throw std::logic_error("kernel combo multiplied to identity");
    }
    return LocalElement{acc.axis_at(r), sign};
  }

  // Structural consistency: rows pair up symplectically the way destabilizer
  // and stabilizer rows must. Cheap enough to run under a debug flag.
  bool check_invariants() const {
    for (size_t i = 0; i < 2 * n_; ++i) {
      for (size_t j = i + 1; j < 2 * n_; ++j) {
        bool want = (j == i + n_);
        if (anticommutes(rows_[i], rows_[j]) != want) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  // row_target <- row_source * row_target, with sign bookkeeping only when
  // the target is a stabilizer row.
  void accumulate(size_t target, size_t source) {
    int expo = mul_phase_exponent(rows_[source], rows_[target]);
    if (target >= n_) {
      if (expo & 1) {
        throw std::logic_error("stabilizer rowsum with imaginary phase");
      }
      signs_[target - n_] ^= signs_[source - n_];
      if (expo == 2) {
        signs_[target - n_].flip();
      }
    }
    rows_[target] ^= rows_[source];
  }

  static unsigned pack1(const PauliBits& row, size_t a) {
    return (row.x.get(a) ? 1u : 0u) | (row.z.get(a) ? 2u : 0u);
  }
  static void unpack1(PauliBits& row, size_t a, unsigned p) {
    row.x.set(a, p & 1);
    row.z.set(a, (p >> 1) & 1);
  }
  static unsigned pack2(const PauliBits& row, size_t a, size_t b) {
    return pack1(row, a) | (pack1(row, b) << 2);
  }
  static void unpack2(PauliBits& row, size_t a, size_t b, unsigned p) {
    unpack1(row, a, p & 3);
    unpack1(row, b, (p >> 2) & 3);
  }

  BitVec restrict_row(const PauliBits& row, const std::vector<size_t>& sites) const {
    BitVec v(2 * sites.size());
    for (size_t k = 0; k < sites.size(); ++k) {
      v.set(2 * k, row.x.get(sites[k]));
      v.set(2 * k + 1, row.z.get(sites[k]));
    }
    return v;
  }

  // Gaussian elimination on `rows` with `combos` mirrored; combinations whose
  // row reduced to zero land in `kernel`. Each row is reduced by leading
  // column until it either empties or claims a fresh pivot column.
  static void eliminate_tracking(std::vector<BitVec>& rows, std::vector<BitVec>& combos,
                                 std::vector<BitVec>& kernel) {
    std::vector<size_t> pivot_row_for_col(rows.empty() ? 0 : rows[0].size(),
                                          rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      for (;;) {
        size_t p = rows[i].find_first();
        if (p == rows[i].size()) {
          kernel.push_back(combos[i]);
          break;
        }
        size_t owner = pivot_row_for_col[p];
        if (owner == rows.size()) {
          pivot_row_for_col[p] = i;
          break;
        }
        rows[i] ^= rows[owner];
        combos[i] ^= combos[owner];
      }
    }
  }

  size_t n_;
  std::vector<PauliBits> rows_;
  std::vector<Sign> signs_;
};

using Tableau = BasicTableau<ConcreteSign>;
using SymbolicTableau = BasicTableau<AffineSign>;

}  // namespace mipt
