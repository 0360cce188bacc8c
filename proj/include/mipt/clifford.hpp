// Clifford gates as conjugation tables: the images of the generators X_i, Z_i
// on the gate's support, with signs. Applying a gate to a Pauli row is a
// lookup in a precomputed table over the 2^(2*arity) local bit patterns.
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mipt/pauli.hpp"
#include "mipt/rng.hpp"

namespace mipt {

namespace detail {

// Local Paulis on <= 2 sites packed into 4 bits: (x0, z0, x1, z1).
inline bool local_anticommutes(unsigned a, unsigned b) {
  unsigned x1 = a & 1, z1 = (a >> 1) & 1, x2 = (a >> 2) & 1, z2 = (a >> 3) & 1;
  unsigned bx1 = b & 1, bz1 = (b >> 1) & 1, bx2 = (b >> 2) & 1, bz2 = (b >> 3) & 1;
  return ((x1 & bz1) ^ (z1 & bx1) ^ (x2 & bz2) ^ (z2 & bx2)) != 0;
}

inline PauliBits local_to_bits(unsigned p, size_t arity) {
  PauliBits bits(arity);
  bits.x.set(0, p & 1);
  bits.z.set(0, (p >> 1) & 1);
  if (arity == 2) {
    bits.x.set(1, (p >> 2) & 1);
    bits.z.set(1, (p >> 3) & 1);
  }
  return bits;
}

inline unsigned bits_to_local(const PauliBits& bits) {
  unsigned p = 0;
  p |= bits.x.get(0) ? 1u : 0u;
  p |= bits.z.get(0) ? 2u : 0u;
  if (bits.num_qubits() == 2) {
    p |= bits.x.get(1) ? 4u : 0u;
    p |= bits.z.get(1) ? 8u : 0u;
  }
  return p;
}

}  // namespace detail

// One entry of the conjugation action: output local pattern and sign flip.
struct GateAction {
  uint8_t bits = 0;
  bool flip = false;
};

class CliffordGate {
 public:
  CliffordGate() = default;

  // images[k] is the image of generator k with generators ordered
  // X_0, Z_0, (X_1, Z_1); image_signs[k] set means the image is negated.
  CliffordGate(size_t arity, std::vector<PauliBits> images, std::vector<bool> image_signs)
      : arity_(arity), images_(std::move(images)), image_signs_(std::move(image_signs)) {
    if (arity_ != 1 && arity_ != 2) {
      throw std::invalid_argument("gate arity must be 1 or 2");
    }
    if (images_.size() != 2 * arity_ || image_signs_.size() != 2 * arity_) {
      throw std::invalid_argument("gate needs one image per generator");
    }
    check_symplectic();
    build_action_table();
  }

  size_t arity() const { return arity_; }
  const std::vector<PauliBits>& images() const { return images_; }
  const std::vector<bool>& image_signs() const { return image_signs_; }

  GateAction action(unsigned local_pattern) const { return table_[local_pattern]; }

  // Stable identity for hashing/comparison: packed image bits and signs.
  uint64_t fingerprint() const {
    uint64_t f = arity_;
    for (size_t k = 0; k < images_.size(); ++k) {
      f = (f << 5) | (detail::bits_to_local(images_[k]) << 1) | (image_signs_[k] ? 1 : 0);
    }
    return f;
  }

  bool operator==(const CliffordGate& o) const {
    return arity_ == o.arity_ && fingerprint() == o.fingerprint();
  }

  CliffordGate inverse() const;

  static CliffordGate identity2() {
    std::vector<PauliBits> imgs;
    for (unsigned p : {1u, 2u, 4u, 8u}) {
      imgs.push_back(detail::local_to_bits(p, 2));
    }
    return CliffordGate(2, std::move(imgs), std::vector<bool>(4, false));
  }

 private:
  void check_symplectic() {
    for (size_t i = 0; i < images_.size(); ++i) {
      if (images_[i].is_identity()) {
        throw std::invalid_argument("gate image must not be identity");
      }
      for (size_t j = i + 1; j < images_.size(); ++j) {
        // X_k anticommutes with Z_k and commutes with everything else.
        bool want = (j == i + 1) && (i % 2 == 0);
        if (anticommutes(images_[i], images_[j]) != want) {
          throw std::invalid_argument("gate images break the symplectic condition");
        }
      }
    }
  }

  void build_action_table() {
    size_t patterns = arity_ == 1 ? 4 : 16;
    table_.assign(patterns, GateAction{});
    for (unsigned p = 1; p < patterns; ++p) {
      unsigned xa = p & 1, za = (p >> 1) & 1, xb = (p >> 2) & 1, zb = (p >> 3) & 1;
      PauliBits acc(arity_);
      int expo = 0;  // power of i, mod 4
      auto mul_in = [&](size_t gen) {
        expo = (expo + mul_phase_exponent(acc, images_[gen])) & 3;
        acc ^= images_[gen];
        if (image_signs_[gen]) {
          expo = (expo + 2) & 3;
        }
      };
      if (xa) mul_in(0);
      if (za) mul_in(1);
      if (xb) mul_in(2);
      if (zb) mul_in(3);
      expo = (expo + (xa & za) + (xb & zb)) & 3;  // canonical Y = i X Z on input sites
      if (expo & 1) {
        throw std::logic_error("clifford conjugation produced imaginary sign");
      }
      table_[p] = GateAction{static_cast<uint8_t>(detail::bits_to_local(acc)), expo == 2};
    }
  }

  size_t arity_ = 0;
  std::vector<PauliBits> images_;
  std::vector<bool> image_signs_;
  std::vector<GateAction> table_;
};

inline CliffordGate CliffordGate::inverse() const {
  // Invert the symplectic bit map, then fix each image sign so that forward
  // conjugation of the candidate reproduces +generator.
  size_t dim = 2 * arity_;
  // rows[i] = bit map of image of generator i as a packed pattern, plus an
  // identity block to track the inverse (Gauss-Jordan over GF(2)).
  std::vector<unsigned> fwd(dim), inv(dim);
  for (size_t i = 0; i < dim; ++i) {
    fwd[i] = detail::bits_to_local(images_[i]);
    inv[i] = 1u << i;
  }
  // Solve M^T reconstruction: we need, for each target generator e_j, the
  // input pattern v with sum_i v_i * fwd[i] = e_j. Gaussian elimination on
  // the fwd rows with the inv rows mirrored.
  std::vector<unsigned> rows = fwd, comb = inv;
  std::vector<unsigned> pattern_for(dim, 0);
  for (size_t col = 0, r = 0; col < dim && r < dim; ++col) {
    size_t piv = r;
    while (piv < dim && !((rows[piv] >> col) & 1)) {
      ++piv;
    }
    if (piv == dim) {
      continue;
    }
    std::swap(rows[r], rows[piv]);
    std::swap(comb[r], comb[piv]);
    for (size_t k = 0; k < dim; ++k) {
      if (k != r && ((rows[k] >> col) & 1)) {
        rows[k] ^= rows[r];
        comb[k] ^= comb[r];
      }
    }
    ++r;
  }
  // rows is now a permuted identity; map each unit row to its combination.
  for (size_t r = 0; r < dim; ++r) {
    if (std::popcount(rows[r]) != 1) {
      throw std::logic_error("gate bit map is singular");
    }
    pattern_for[static_cast<size_t>(std::countr_zero(rows[r]))] = comb[r];
  }
  std::vector<PauliBits> inv_images;
  std::vector<bool> inv_signs;
  for (size_t j = 0; j < dim; ++j) {
    unsigned v = pattern_for[j];
    GateAction fwd_act = table_[v];
    if (fwd_act.bits != (1u << j)) {
      throw std::logic_error("inverse candidate does not map back to generator");
    }
    inv_images.push_back(detail::local_to_bits(v, arity_));
    inv_signs.push_back(fwd_act.flip);
  }
  return CliffordGate(arity_, std::move(inv_images), std::move(inv_signs));
}

// Uniform sample from the 11520-element two-qubit Clifford group (mod global
// phase), by drawing a random symplectic basis image and 4 sign bits.
inline CliffordGate sample_random_clifford_2q(RandomStream& stream) {
  auto pick = [&](const std::vector<unsigned>& candidates) {
    return candidates[stream.next_below(candidates.size())];
  };
  unsigned img_x0 = static_cast<unsigned>(stream.next_below(15)) + 1;

  std::vector<unsigned> anti;
  for (unsigned q = 1; q < 16; ++q) {
    if (detail::local_anticommutes(img_x0, q)) {
      anti.push_back(q);
    }
  }
  unsigned img_z0 = pick(anti);

  std::vector<unsigned> centralizer;
  for (unsigned q = 1; q < 16; ++q) {
    if (!detail::local_anticommutes(img_x0, q) && !detail::local_anticommutes(img_z0, q)) {
      centralizer.push_back(q);
    }
  }
  unsigned img_x1 = pick(centralizer);

  std::vector<unsigned> partners;
  for (unsigned q : centralizer) {
    if (detail::local_anticommutes(img_x1, q)) {
      partners.push_back(q);
    }
  }
  unsigned img_z1 = pick(partners);

  std::vector<PauliBits> images;
  for (unsigned p : {img_x0, img_z0, img_x1, img_z1}) {
    images.push_back(detail::local_to_bits(p, 2));
  }
  std::vector<bool> signs;
  for (int k = 0; k < 4; ++k) {
    signs.push_back(stream.next_bit());
  }
  return CliffordGate(2, std::move(images), std::move(signs));
}

}  // namespace mipt
