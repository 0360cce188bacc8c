// Little-endian binary primitives. Values are packed byte by byte so files
// are identical regardless of host endianness.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mipt::io {

inline void put_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream& os, uint16_t v) {
  put_u8(os, static_cast<uint8_t>(v & 0xff));
  put_u8(os, static_cast<uint8_t>(v >> 8));
}

inline void put_u64(std::ostream& os, uint64_t v) {
  for (int k = 0; k < 8; ++k) {
    put_u8(os, static_cast<uint8_t>((v >> (8 * k)) & 0xff));
  }
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<uint64_t>(v));
}

inline void put_u32(std::ostream& os, uint32_t v) {
  for (int k = 0; k < 4; ++k) {
    put_u8(os, static_cast<uint8_t>((v >> (8 * k)) & 0xff));
  }
}

inline void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<uint32_t>(v));
}

inline void put_i8(std::ostream& os, int8_t v) {
  put_u8(os, static_cast<uint8_t>(v));
}

inline uint8_t get_u8(std::istream& is) {
  int c = is.get();
  if (c == std::istream::traits_type::eof()) {
    throw std::runtime_error("unexpected end of file");
  }
  return static_cast<uint8_t>(c);
}

inline uint16_t get_u16(std::istream& is) {
  uint16_t lo = get_u8(is);
  uint16_t hi = get_u8(is);
  return static_cast<uint16_t>(lo | (hi << 8));
}

inline uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  for (int k = 0; k < 8; ++k) {
    v |= static_cast<uint64_t>(get_u8(is)) << (8 * k);
  }
  return v;
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

inline uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    v |= static_cast<uint32_t>(get_u8(is)) << (8 * k);
  }
  return v;
}

inline float get_f32(std::istream& is) {
  return std::bit_cast<float>(get_u32(is));
}

inline int8_t get_i8(std::istream& is) {
  return static_cast<int8_t>(get_u8(is));
}

inline void put_bytes(std::ostream& os, const char* data, size_t n) {
  os.write(data, static_cast<std::streamsize>(n));
}

inline void get_bytes(std::istream& is, char* data, size_t n) {
  is.read(data, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) {
    throw std::runtime_error("unexpected end of file");
  }
}

}  // namespace mipt::io
