// Counter-based deterministic randomness. Every stream is keyed by hashing
// integers together, so substreams can be generated in any order on any
// platform and always agree.
#pragma once

#include <cstdint>
#include <initializer_list>

namespace mipt {

// splitmix64 finalizer; full-avalanche 64-bit mixer.
inline uint64_t mix64(uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_u64s(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x8f1bbcdcbfa53e0bull;
  for (uint64_t p : parts) {
    h = mix64(h ^ mix64(p));
  }
  return h;
}

// Stream tags keep substreams drawn for different purposes disjoint.
namespace tag {
inline constexpr uint64_t kGate = 0x67617465ull;      // "gate"
inline constexpr uint64_t kMeas = 0x6d656173ull;      // "meas"
inline constexpr uint64_t kScramble = 0x73637261ull;  // "scra"
inline constexpr uint64_t kTraj = 0x7472616aull;      // "traj"
inline constexpr uint64_t kInit = 0x696e6974ull;      // "init"
inline constexpr uint64_t kShuffle = 0x73687566ull;   // "shuf"
inline constexpr uint64_t kDropout = 0x64726f70ull;   // "drop"
inline constexpr uint64_t kLabel = 0x6c61626cull;     // "labl"
}  // namespace tag

// Deterministic random stream in counter mode: word i is mix64(key + i).
// next_bit() serves the 64 bits of one word before consuming the next, so a
// consumer that draws one bit per event uses exactly one bit per event.
class RandomStream {
 public:
  RandomStream() : RandomStream(0) {}
  explicit RandomStream(uint64_t key) : key_(key) {}

  uint64_t next_u64() { return mix64(key_ + 0x632be59bd9b4e019ull * ++counter_); }

  bool next_bit() {
    if (bits_left_ == 0) {
      bit_buffer_ = next_u64();
      bits_left_ = 64;
    }
    bool b = bit_buffer_ & 1;
    bit_buffer_ >>= 1;
    --bits_left_;
    return b;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); unbiased via rejection.
  uint64_t next_below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) {
        return r % n;
      }
    }
  }

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  uint64_t bit_buffer_ = 0;
  int bits_left_ = 0;
};

}  // namespace mipt
