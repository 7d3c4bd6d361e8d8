#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dpobs/errors.hpp"
#include "dpobs/matrix.hpp"

namespace dpobs {

/// (epsilon, delta) target for the Gaussian mechanism.
struct PrivacyParams {
  double epsilon;
  double delta;

  PrivacyParams(double epsilon_, double delta_) : epsilon(epsilon_), delta(delta_) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw domain_error("epsilon must be positive");
    if (!(delta > 0.0 && delta <= 0.5))
      throw domain_error("delta must lie in (0, 0.5]");
  }
};

/// Gaussian upper-tail probability Q(x) = P(Z > x) for standard normal Z,
/// via the complementary error function.
inline double q_function(double x) {
  if (!std::isfinite(x)) throw domain_error("q_function: x must be finite");
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/// Inverse of Q on (0, 0.5]: the x >= 0 with Q(x) = delta. Bracketed
/// bisection on [0, 40] followed by a Newton polish (Q' = -phi).
inline double q_inverse(double delta) {
  if (!(delta > 0.0 && delta <= 0.5))
    throw domain_error("q_inverse: delta must lie in (0, 0.5]");
  if (delta == 0.5) return 0.0;

  double lo = 0.0, hi = 40.0;
  // Q is strictly decreasing; Q(lo) = 0.5 > delta and Q(hi) < delta for
  // every representable delta in (0, 0.5).
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > delta)
      lo = mid;
    else
      hi = mid;
  }
  double x = 0.5 * (lo + hi);
  const double inv_sqrt_2pi = 0.3989422804014327;
  for (int i = 0; i < 3; ++i) {
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (pdf == 0.0) break;
    x -= (delta - q_function(x)) / pdf;
  }
  return x < 0.0 ? 0.0 : x;
}

/// Calibration constant kappa_{delta,epsilon} = (1/2eps)(K + sqrt(K^2 + 2eps))
/// with K = Q^{-1}(delta).
inline double kappa(const PrivacyParams& priv) {
  const double k = q_inverse(priv.delta);
  return (k + std::sqrt(k * k + 2.0 * priv.epsilon)) / (2.0 * priv.epsilon);
}

/// Per-coordinate noise scale plus the stream parameters needed to realize it.
struct NoiseSpec {
  double sigma;
  int dim;
  std::uint64_t seed;
};

/// Gaussian-mechanism calibration: per-coordinate standard deviation
/// sigma = kappa_{delta,epsilon} * delta_G, where delta_G is the l2
/// sensitivity (or a bound on it) of the released signal.
inline NoiseSpec calibrate(const PrivacyParams& priv, double delta_G, int dim,
                           std::uint64_t seed) {
  if (!(delta_G > 0.0) || !std::isfinite(delta_G))
    throw domain_error("calibrate: sensitivity delta_G must be positive");
  if (dim <= 0) throw domain_error("calibrate: dimension must be positive");
  return NoiseSpec{kappa(priv) * delta_G, dim, seed};
}

/// Deterministic stream of i.i.d. N(0, sigma^2) vectors. Uniform variates
/// come from std::mt19937_64 seeded explicitly; the Gaussian transform is
/// Box-Muller, so identical seeds give identical streams on any platform.
class GaussianSampler {
 public:
  explicit GaussianSampler(const NoiseSpec& spec) : spec_(spec), gen_(spec.seed) {
    if (!(spec.sigma > 0.0)) throw domain_error("noise sigma must be positive");
    if (spec.dim <= 0) throw domain_error("noise dimension must be positive");
  }

  double next_scalar() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * spec_.sigma;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle) * spec_.sigma;
  }

  Vector next() {
    Vector v(spec_.dim);
    for (int i = 0; i < spec_.dim; ++i) v[i] = next_scalar();
    return v;
  }

 private:
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;  // [0, 1)
  }

  NoiseSpec spec_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// `steps` i.i.d. noise vectors drawn from a fresh stream for spec.seed.
inline std::vector<Vector> sample_noise(const NoiseSpec& spec, int steps) {
  if (steps <= 0) throw domain_error("sample_noise: steps must be positive");
  GaussianSampler sampler(spec);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) out.push_back(sampler.next());
  return out;
}

}  // namespace dpobs
