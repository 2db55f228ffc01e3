#pragma once

#include <cstdint>

#include "traveltime/stats.hpp"

namespace traveltime {

/// SplitMix64. Used both as a small fast generator and to derive independent
/// stream seeds from a (master seed, stream index) pair.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Derives the seed of sub-stream `index` from a master seed; streams derived
/// this way are independent enough for Monte Carlo use and make per-trip
/// generation order-free and parallelizable.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  SplitMix64 g(master ^ 0x5851f42d4c957f2dULL);
  std::uint64_t base = g.next();
  SplitMix64 h(base + index * 0x9e3779b97f4a7c15ULL);
  h.next();
  return h.next();
}

/// xoshiro256** — small, fast, reproducible across platforms (unlike the
/// distributions in <random>, whose output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& s : s_) s = sm.next();
  }

  std::uint64_t next_u64() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform draw in the open interval (0,1); safe as a quantile argument.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform draw in [0,1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via inverse CDF, keeping output platform-stable.
  double normal() { return normal_quantile(next_open01()); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection-free enough for our n << 2^64 use
    return static_cast<std::uint64_t>(next_unit() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace traveltime
