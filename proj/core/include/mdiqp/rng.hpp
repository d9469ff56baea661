#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdiqp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable per-(module, index) seed; independent of call order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view module, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ fnv1a(module)) + splitmix64(index));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace mdiqp
