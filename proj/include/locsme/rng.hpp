#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "locsme/types.hpp"

namespace locsme {

/// SplitMix64 finalizer; used for deterministic seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-trial seed derived from (master seed, axis index, trial index).
/// Stable across platforms and worker counts.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t axis_index,
                                 std::uint64_t trial_index) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ axis_index);
  s = mix64(s ^ trial_index);
  return s;
}

/// Deterministic random source. Distributions are implemented here (not via
/// std::*_distribution) so that streams are identical across standard
/// libraries; reproducibility of stored results depends on it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; generates pairs, caches the spare.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    double u1 = 1.0 - uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  cx cgaussian(double variance) {
    double s = std::sqrt(variance * 0.5);
    double re = gaussian();
    double im = gaussian();
    return {s * re, s * im};
  }

  CVector cgaussian_vector(Eigen::Index m, double variance) {
    CVector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = cgaussian(variance);
    return v;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace locsme
