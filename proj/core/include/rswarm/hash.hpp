#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rswarm {

/// FNV-1a 64-bit. Stable across platforms and runs; used for content keys
/// (snapshot digests, replay lookup), not for anything adversarial.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

inline std::string content_hash(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace rswarm
