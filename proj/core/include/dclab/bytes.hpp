#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dclab {

// Byte strings throughout use std::string; std::char_traits compares by
// unsigned char, so the default ordering is byte-lexicographic.
using Bytes = std::string;

// Reserved sentinel for ⊥. No value encoding produced by the message codec
// or the dictionaries is the single byte 0xFF, so this is unambiguous.
inline const Bytes kBotSentinel = Bytes(1, static_cast<char>(0xFF));

inline bool is_bot(const Bytes& b) { return b == kBotSentinel; }

inline void append_u32_be(Bytes& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

inline void append_u64_be(Bytes& out, uint64_t v) {
  append_u32_be(out, static_cast<uint32_t>(v >> 32));
  append_u32_be(out, static_cast<uint32_t>(v & 0xFFFFFFFFu));
}

inline void append_i64_be(Bytes& out, int64_t v) {
  append_u64_be(out, static_cast<uint64_t>(v));
}

// Length-prefixed frame: 4-byte big-endian length, then the raw bytes.
inline void append_frame(Bytes& out, const Bytes& b) {
  append_u32_be(out, static_cast<uint32_t>(b.size()));
  out += b;
}

std::string to_hex(const Bytes& b);
std::optional<Bytes> from_hex(const std::string& hex);

// FNV-1a, used for content identity of scenario files (not security).
uint64_t fnv1a64(const Bytes& b);

namespace detail {
inline char hex_digit(unsigned v) { return v < 10 ? char('0' + v) : char('a' + v - 10); }
}  // namespace detail

inline std::string to_hex(const Bytes& b) {
  std::string out;
  out.reserve(b.size() * 2);
  for (unsigned char c : b) {
    out.push_back(detail::hex_digit(c >> 4));
    out.push_back(detail::hex_digit(c & 0xF));
  }
  return out;
}

inline std::optional<Bytes> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    unsigned v = 0;
    for (int k = 0; k < 2; ++k) {
      char c = hex[i + k];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= unsigned(c - '0');
      else if (c >= 'a' && c <= 'f') v |= unsigned(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= unsigned(c - 'A' + 10);
      else return std::nullopt;
    }
    out.push_back(static_cast<char>(v));
  }
  return out;
}

inline uint64_t fnv1a64(const Bytes& b) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : b) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace dclab
