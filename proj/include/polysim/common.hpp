// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace polysim {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i8 = std::int8_t;
using i16 = std::int16_t;
using i32 = std::int32_t;
using i64 = std::int64_t;

// Raised on malformed user input: assembly syntax, bad configs, bad images.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised on violated tool-level contracts (bad key width, layout overflow,
// encryptor scan failures, generation overflow).
class ToolError : public std::runtime_error {
 public:
  explicit ToolError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses "8000…" / "0x8000…" into bytes, hex-string order.
inline std::vector<u8> parse_hex(const std::string& s) {
  std::string t = s;
  if (t.size() >= 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) t = t.substr(2);
  if (t.size() % 2 != 0) throw ParseError("hex string has odd length: " + s);
  std::vector<u8> out;
  out.reserve(t.size() / 2);
  for (size_t i = 0; i < t.size(); i += 2) {
    int hi = hex_digit(t[i]), lo = hex_digit(t[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("bad hex digit in: " + s);
    out.push_back(static_cast<u8>(hi << 4 | lo));
  }
  return out;
}

inline std::string to_hex(const std::vector<u8>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (u8 b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

inline std::string hex32(u32 v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

// FNV-1a over a byte range; used for memory digests in run reports.
inline u64 fnv1a64(const u8* data, size_t n, u64 h = 0xcbf29ce484222325ull) {
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline u32 popcount32(u32 x) { return static_cast<u32>(__builtin_popcount(x)); }

}  // namespace polysim
