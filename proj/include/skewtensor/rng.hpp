#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skewtensor {

// Deterministic generator: mt19937_64 plus hand-rolled variate transforms.
// std::normal_distribution and friends are implementation-defined, so using
// them would break the same-seed-same-stream contract across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform on (0, 1): never returns an endpoint, safe under log().
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Marsaglia polar; caches the spare deviate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double exponential() { return -std::log(uniform()); }

  // Gamma(shape, rate) via Marsaglia-Tsang; shape < 1 boosted through
  // G(shape) = G(shape + 1) * U^{1/shape}.
  double gamma(double shape, double rate) {
    double boost = 1.0;
    if (shape < 1.0) {
      boost = std::pow(uniform(), 1.0 / shape);
      shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return boost * d * v / rate;
    }
  }

  double inv_gamma(double shape, double scale) { return scale == 0.0 ? 0.0 : 1.0 / gamma(shape, scale); }

  // Wald / inverse-Gaussian with mean mu and shape lam, via
  // Michael-Schucany-Haas.
  double inv_gaussian(double mu, double lam) {
    const double z = normal();
    const double y = z * z;
    const double x = mu + mu * mu * y / (2.0 * lam) -
                     mu / (2.0 * lam) * std::sqrt(4.0 * mu * lam * y + mu * mu * y * y);
    return uniform() <= mu / (mu + x) ? x : mu * mu / x;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream derivation for independent substreams (study cells, replicates):
// splitmix64 finalizer over the mixed words.
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  uint64_t z = seed;
  for (uint64_t w : {a + 1, b + 1}) {
    z += 0x9e3779b97f4a7c15ULL * (w + 0x632be59bd9b4e019ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
  }
  return z;
}

}  // namespace skewtensor
