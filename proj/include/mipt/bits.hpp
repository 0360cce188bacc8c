// Bit-packed GF(2) vectors, 64 columns per machine word.
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mipt {

// Dense bit vector over GF(2). Unused high bits of the last word are kept zero.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(size_t num_bits) : num_bits_(num_bits), words_((num_bits + 63) / 64, 0) {}

  size_t size() const { return num_bits_; }
  size_t num_words() const { return words_.size(); }

  bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(size_t i, bool v) {
    uint64_t mask = uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(size_t i) { words_[i >> 6] ^= uint64_t{1} << (i & 63); }

  uint64_t word(size_t w) const { return words_[w]; }
  uint64_t& word(size_t w) { return words_[w]; }

  void clear() {
    for (auto& w : words_) {
      w = 0;
    }
  }

  bool is_zero() const {
    for (uint64_t w : words_) {
      if (w) {
        return false;
      }
    }
    return true;
  }

  size_t popcount() const {
    size_t n = 0;
    for (uint64_t w : words_) {
      n += static_cast<size_t>(std::popcount(w));
    }
    return n;
  }

  // Index of the lowest set bit, or size() if none.
  size_t find_first() const {
    for (size_t w = 0; w < words_.size(); ++w) {
      if (words_[w]) {
        return w * 64 + static_cast<size_t>(std::countr_zero(words_[w]));
      }
    }
    return num_bits_;
  }

  BitVec& operator^=(const BitVec& o) {
    if (o.words_.size() > words_.size()) {
      words_.resize(o.words_.size(), 0);
      num_bits_ = o.num_bits_;
    }
    for (size_t w = 0; w < o.words_.size(); ++w) {
      words_[w] ^= o.words_[w];
    }
    return *this;
  }

  bool operator==(const BitVec& o) const {
    size_t common = words_.size() < o.words_.size() ? words_.size() : o.words_.size();
    for (size_t w = 0; w < common; ++w) {
      if (words_[w] != o.words_[w]) {
        return false;
      }
    }
    for (size_t w = common; w < words_.size(); ++w) {
      if (words_[w]) {
        return false;
      }
    }
    for (size_t w = common; w < o.words_.size(); ++w) {
      if (o.words_[w]) {
        return false;
      }
    }
    return true;
  }
  bool operator!=(const BitVec& o) const { return !(*this == o); }

  // Grows to hold at least num_bits, doubling capacity to amortize reallocation.
  void ensure_size(size_t num_bits) {
    if (num_bits <= num_bits_) {
      return;
    }
    size_t want_words = (num_bits + 63) / 64;
    if (want_words > words_.size()) {
      size_t cap = words_.size() ? words_.size() : 1;
      while (cap < want_words) {
        cap *= 2;
      }
      words_.resize(cap, 0);
    }
    num_bits_ = num_bits;
  }

  // Parity of the AND of two vectors (GF(2) inner product).
  static bool dot(const BitVec& a, const BitVec& b) {
    size_t common = a.words_.size() < b.words_.size() ? a.words_.size() : b.words_.size();
    uint64_t acc = 0;
    for (size_t w = 0; w < common; ++w) {
      acc ^= a.words_[w] & b.words_[w];
    }
    return std::popcount(acc) & 1;
  }

  std::vector<size_t> set_bits() const {
    std::vector<size_t> out;
    for (size_t w = 0; w < words_.size(); ++w) {
      uint64_t word = words_[w];
      while (word) {
        out.push_back(w * 64 + static_cast<size_t>(std::countr_zero(word)));
        word &= word - 1;
      }
    }
    return out;
  }

 private:
  size_t num_bits_ = 0;
  std::vector<uint64_t> words_;
};

// Rank of a GF(2) matrix given as rows; destroys the argument.
inline size_t gf2_rank_inplace(std::vector<BitVec>& rows) {
  size_t rank = 0;
  size_t cols = rows.empty() ? 0 : rows[0].size();
  for (size_t col = 0; col < cols && rank < rows.size(); ++col) {
    size_t pivot = rank;
    while (pivot < rows.size() && !rows[pivot].get(col)) {
      ++pivot;
    }
    if (pivot == rows.size()) {
      continue;
    }
    std::swap(rows[rank], rows[pivot]);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (r != rank && rows[r].get(col)) {
        rows[r] ^= rows[rank];
      }
    }
    ++rank;
  }
  return rank;
}

inline size_t gf2_rank(std::vector<BitVec> rows) { return gf2_rank_inplace(rows); }

}  // namespace mipt
