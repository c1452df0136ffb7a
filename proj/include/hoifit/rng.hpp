#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace hoifit {

// splitmix64; used to derive independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 1));
}

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 output is
// pinned by the standard, but std::uniform_real_distribution and
// std::normal_distribution are not, so we do not use them: every sample here
// is bit-identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::Vector3d vec3_uniform(double lo, double hi) {
    // Evaluation order of constructor args is unspecified; sample explicitly.
    const double x = uniform(lo, hi);
    const double y = uniform(lo, hi);
    const double z = uniform(lo, hi);
    return {x, y, z};
  }

  Eigen::Vector3d vec3_normal(double stddev) {
    const double x = normal(0.0, stddev);
    const double y = normal(0.0, stddev);
    const double z = normal(0.0, stddev);
    return {x, y, z};
  }

  // Uniform over SO(3): uniform axis (sphere surface) with angle drawn from
  // the Haar density (1 - cos t) / pi on [0, pi], via inverse-CDF bisection.
  Eigen::Vector3d rotvec_uniform_so3() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Eigen::Vector3d axis(rxy * std::cos(phi), rxy * std::sin(phi), z);
    const double u = uniform();
    double lo = 0.0, hi = M_PI;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double cdf = (mid - std::sin(mid)) / M_PI;
      (cdf < u ? lo : hi) = mid;
    }
    return axis * (0.5 * (lo + hi));
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hoifit
