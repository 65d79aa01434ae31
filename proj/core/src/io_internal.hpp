// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

// Shared little-endian stream primitives for the binary file formats. All
// formats open with a 4-byte magic plus a u32 version so readers can fail
// loudly on foreign or future files.

#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rdf::internal {

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& in, void* p, std::size_t n,
                       const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error(std::string("truncated file while reading ") +
                             what);
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_bytes(in, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  read_bytes(in, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in, const char* what) {
  const std::uint64_t bits = read_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline float read_f32(std::istream& in, const char* what) {
  const std::uint32_t bits = read_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

/// Reads and checks a 4-byte magic + u32 version header.
inline std::uint32_t read_header(std::istream& in, const char magic[4],
                                 std::uint32_t max_version,
                                 const std::string& path) {
  char got[4];
  read_bytes(in, got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0) {
    throw std::runtime_error(path + ": bad magic (expected " +
                             std::string(magic, 4) + ")");
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version == 0 || version > max_version) {
    throw std::runtime_error(path + ": unsupported " + std::string(magic, 4) +
                             " version " + std::to_string(version));
  }
  return version;
}

inline void write_header(std::ostream& out, const char magic[4],
                         std::uint32_t version) {
  write_bytes(out, magic, 4);
  write_u32(out, version);
}

}  // namespace rdf::internal
