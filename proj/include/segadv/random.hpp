#pragma once

#include <cstdint>
#include <random>

#include "segadv/image.hpp"

namespace segadv {

/// Seeded random stream. One instance per concurrent job; never shared.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform integer in [0, n).
  Index index(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(engine_); }

  PointPrompt point_in(const Region& r) { return {r.top + index(r.height), r.left + index(r.width)}; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with cell coordinates so that sweep cells get independent,
/// order-free streams (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

}  // namespace segadv
