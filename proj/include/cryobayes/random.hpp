#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cryobayes/types.hpp"

namespace cryobayes {

/// Deterministic random stream: mt19937_64 plus an explicit Box-Muller
/// normal generator, so draws do not depend on the standard library's
/// (implementation-defined) std::normal_distribution.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on (0, 1].
  double uniform() {
    // 53-bit mantissa; never returns 0 so log() below is safe.
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform() - 0x1.0p-53); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return eng_() % n; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec normal_vector(Eigen::Index n) {
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  /// Deterministically derive an independent child seed (splitmix64 step).
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cryobayes
