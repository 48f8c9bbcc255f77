#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lrtc {

// Deterministic random stream. mt19937_64 output is pinned by the standard and
// the distributions below are hand-rolled, so identical seeds give identical
// draws on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1]: 53-bit mantissa, never exactly zero (safe under log).
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, cosine branch only.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Poisson draw by Knuth's product method. Means above 500 are split in half
  // recursively so exp(-mean) stays comfortably inside double range.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 500.0) {
      const double half = mean / 2.0;
      return poisson(half) + poisson(mean - half);
    }
    const double limit = std::exp(-mean);
    std::uint64_t count = 0;
    double product = uniform();
    while (product > limit) {
      ++count;
      product *= uniform();
    }
    return count;
  }

  // Derives an independent-looking child seed; used to give each unit of work
  // in a sweep its own stream.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lrtc
