// Seeded random-number helpers.  All stochastic choices in the pipeline flow
// through an explicit std::mt19937_64 so that a run is reproducible from its
// manifest seed alone.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "hf/types.hpp"

namespace hf {

using Rng = std::mt19937_64;

// Stable 64-bit string hash (FNV-1a), used to derive independent per-stage
// seeds from the single manifest seed.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer: decorrelates seed ^ tag combinations.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t stage_seed(std::uint64_t master, std::string_view stage_tag) {
  return mix64(master ^ hash64(stage_tag));
}

inline MatX normal_matrix(Rng& rng, int rows, int cols, Real stddev) {
  std::normal_distribution<Real> dist(0.0, stddev);
  MatX m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace hf
