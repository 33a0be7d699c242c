#pragma once

#include <cstdint>
#include <string_view>

namespace convsearch {

// FNV-1a, 64-bit. Used for feature bucketing, the hash embedder and file
// fingerprints; must stay byte-stable across platforms.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Mixes another hash into an existing one (order-sensitive).
inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace convsearch
