// SPDX-License-Identifier: Apache-2.0
// Little-endian primitive readers/writers shared by the binary file formats.
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "emovc/error.hpp"

namespace emovc::binio {

template <typename U>
void put_uint(std::ostream& os, U v) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U get_uint(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(U)> bytes;
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (is.gcount() != static_cast<std::streamsize>(sizeof(U)))
    fail(ErrorCode::io, std::string("truncated binary record while reading ") + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double v) { put_uint<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_uint<std::uint64_t>(is, what));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_uint<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, const char* what) {
  const auto n = get_uint<std::uint32_t>(is, what);
  if (n > (1u << 20)) fail(ErrorCode::io, std::string("implausible string length while reading ") + what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != static_cast<std::streamsize>(n))
    fail(ErrorCode::io, std::string("truncated string while reading ") + what);
  return s;
}

inline void put_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
  char buf[4] = {};
  is.read(buf, 4);
  if (is.gcount() != 4 || std::string(buf, 4) != std::string(magic, 4))
    fail(ErrorCode::io, std::string("bad magic in ") + what);
}

}  // namespace emovc::binio
