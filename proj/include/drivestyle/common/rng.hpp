#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace drivestyle {

/// Deterministic RNG used throughout the project. Wraps std::mt19937_64 (the
/// engine is bit-exact per the standard) and owns the uniform/normal
/// transforms so that draws do not depend on libstdc++ distribution
/// internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be > 0");
    return engine_() % n;
  }

  /// Standard normal via Box-Muller. No cached spare: one draw consumes two
  /// engine words, keeping the stream position independent of call parity.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace drivestyle
