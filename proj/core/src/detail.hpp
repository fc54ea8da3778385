#pragma once

#include <cstdint>

namespace kns::detail {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0,1) from a hash.
inline double unit_from_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline std::uint64_t hash_mode(std::uint64_t seed, int k0, int k1, int k2, std::uint64_t salt = 0) {
  std::uint64_t h = mix64(seed ^ salt);
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k0)));
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k1)));
  return mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k2)));
}

}  // namespace kns::detail
