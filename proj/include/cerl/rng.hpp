#pragma once

#include <cstdint>
#include <random>

namespace cerl {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive decorrelated stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x5851f42d4c957f2dULL)));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Scaled standard normal, so stddev = 0 is allowed and yields 0.
inline double gaussian(Rng& rng, double stddev = 1.0) {
  return stddev * std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace cerl
