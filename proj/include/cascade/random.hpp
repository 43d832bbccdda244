#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "cascade/types.hpp"

namespace cascade {

// All sampling goes through explicit transforms of the raw 64-bit engine
// output instead of std::*_distribution, whose algorithms vary between
// standard libraries; a fixed seed must reproduce the same event list
// regardless of toolchain.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for the independent stream identified by (a, b) under a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t a,
                                        std::uint64_t b) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64_next(s);
  s ^= (a + 1) * 0xD1B54A32D192ED03ull;
  h ^= splitmix64_next(s);
  s ^= (b + 1) * 0x8CB92BA72F3D8DD7ull;
  h ^= splitmix64_next(s);
  return h;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double r = std::sqrt(-2.0 * std::log1p(-uniform()));
    const double a = 2.0 * kPi * uniform();
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// Poisson sample; exact product method for small means, normal
  /// approximation above (only used for bootstrap resampling, where the
  /// approximation error at such means is negligible).
  long long poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 48.0) {
      const double limit = std::exp(-mean);
      double p = 1.0;
      long long k = 0;
      do {
        ++k;
        p *= uniform();
      } while (p > limit);
      return k - 1;
    }
    const double z = normal_pair().first;
    const double v = mean + std::sqrt(mean) * z + 0.5;
    return v < 0.0 ? 0 : static_cast<long long>(v);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cascade
