#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>

namespace sparseica {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of a running hash with one more field.
constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v));
}

inline std::uint64_t hash_combine(std::uint64_t h, std::string_view s) {
  // FNV-1a over the bytes, then folded in.
  std::uint64_t f = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    f ^= c;
    f *= 0x100000001b3ULL;
  }
  return hash_combine(h, f);
}

inline std::uint64_t hash_combine(std::uint64_t h, double v) {
  if (v == 0.0) v = 0.0;  // fold -0 onto +0
  return hash_combine(h, std::bit_cast<std::uint64_t>(v));
}

/// Independent stream `index` derived from `master`.
inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(hash_combine(mix64(master), index));
}

}  // namespace sparseica
