#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dpobs/errors.hpp"
#include "dpobs/linalg.hpp"
#include "dpobs/matrix.hpp"
#include "dpobs/mechanism.hpp"
#include "dpobs/sensitivity.hpp"

namespace dpobs {

/// Finite sequence of equal-dimension vectors, one per time step.
struct Trajectory {
  std::vector<Vector> values;

  int steps() const { return static_cast<int>(values.size()); }
  int dim() const { return values.empty() ? 0 : values.front().dim(); }

  const Vector& operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
};

/// Rolls out x(k+1) = A x(k), y(k) = C x(k) for k = 0..steps-1.
/// Returns (states, outputs). Overflow to non-finite raises an error.
inline std::pair<Trajectory, Trajectory> simulate_plant(const Matrix& A, const Matrix& C,
                                                        const Vector& x0, int steps) {
  if (A.rows() != A.cols()) throw domain_error("simulate_plant: A must be square");
  if (C.cols() != A.rows()) throw domain_error("simulate_plant: C incompatible with A");
  if (x0.dim() != A.rows()) throw domain_error("simulate_plant: x0 incompatible with A");
  if (steps <= 0) throw domain_error("simulate_plant: steps must be positive");

  Trajectory states, outputs;
  states.values.reserve(steps);
  outputs.values.reserve(steps);
  Vector x = x0;
  for (int k = 0; k < steps; ++k) {
    states.values.push_back(x);
    outputs.values.push_back(C * x);
    x = A * x;  // validation inside operator* catches overflow
  }
  return {std::move(states), std::move(outputs)};
}

/// Rolls out the observer z(k+1) = (A - LC) z(k) + L y(k). When a noise spec
/// is given, the returned trajectory is the released one, z(k) + w(k); the
/// internal recursion stays noise-free.
inline Trajectory simulate_observer(const ObserverSpec& spec, const Trajectory& y,
                                    const Vector& z0,
                                    const std::optional<NoiseSpec>& noise = std::nullopt) {
  if (y.steps() == 0) throw domain_error("simulate_observer: empty output trajectory");
  if (y.dim() != spec.output_dim())
    throw domain_error("simulate_observer: y dimension does not match C");
  if (z0.dim() != spec.state_dim())
    throw domain_error("simulate_observer: z0 dimension does not match A");

  const Matrix closed_loop = spec.error_dynamics();
  std::optional<GaussianSampler> sampler;
  if (noise) {
    if (noise->dim != spec.state_dim())
      throw domain_error("simulate_observer: noise dimension does not match state");
    sampler.emplace(*noise);
  }

  Trajectory released;
  released.values.reserve(y.steps());
  Vector z = z0;
  for (int k = 0; k < y.steps(); ++k) {
    released.values.push_back(sampler ? z + sampler->next() : z);
    z = closed_loop * z + spec.L * y[k];
  }
  return released;
}

enum class DirectionPolicy {
  fixed_unit,     // one unit vector for every step
  random_unit,    // fresh random unit vector per step
  positive_sign,  // p = 1 only: deviation is +K alpha^(k-k0)
};

/// Two adjacent trajectories: equal before k0, afterwards differing by
/// exactly K alpha^(k-k0) in norm (the adjacency inequality saturated).
struct AdjacentPair {
  Trajectory y;
  Trajectory y_prime;
  int k0 = 0;
  AdjacencyParams adj;

  /// Verifies the adjacency invariant: equality before k0 and
  /// ||y(k) - y'(k)|| <= K alpha^(k-k0) afterwards, at `slack` tolerance.
  void validate(double slack = 1e-12) const {
    if (y.steps() != y_prime.steps() || y.dim() != y_prime.dim())
      throw domain_error("adjacent pair: trajectory shapes differ");
    for (int k = 0; k < y.steps(); ++k) {
      const double deviation = (y[k] - y_prime[k]).norm();
      if (k < k0) {
        if (deviation != 0.0) throw domain_error("adjacent pair: prefixes differ before k0");
      } else {
        const double cap = adj.K * std::pow(adj.alpha, k - k0);
        if (deviation > cap * (1.0 + slack) + slack)
          throw domain_error("adjacent pair: deviation exceeds the adjacency envelope");
      }
    }
  }
};

inline AdjacentPair make_adjacent_pair(const Trajectory& y, int k0, const AdjacencyParams& adj,
                                       DirectionPolicy policy, std::uint64_t seed = 0,
                                       const std::optional<Vector>& fixed_direction = std::nullopt) {
  if (k0 < 0 || k0 >= y.steps())
    throw domain_error("make_adjacent_pair: k0 must lie within the trajectory");
  const int p = y.dim();
  if (policy == DirectionPolicy::positive_sign && p != 1)
    throw domain_error("make_adjacent_pair: positive_sign policy requires p = 1");

  Vector base_dir(p);
  if (policy == DirectionPolicy::fixed_unit) {
    base_dir = fixed_direction ? *fixed_direction : detail::random_unit_vector(p, seed);
    const double nrm = base_dir.norm();
    if (nrm == 0.0) throw domain_error("make_adjacent_pair: zero direction");
    base_dir *= 1.0 / nrm;
  }

  std::mt19937_64 gen(seed);
  AdjacentPair pair{y, y, k0, adj};
  for (int k = k0; k < y.steps(); ++k) {
    const double magnitude = adj.K * std::pow(adj.alpha, k - k0);  // alpha^0 = 1 even for alpha = 0
    Vector dir(p);
    switch (policy) {
      case DirectionPolicy::fixed_unit:
        dir = base_dir;
        break;
      case DirectionPolicy::random_unit:
        dir = detail::random_unit_vector(p, gen());
        break;
      case DirectionPolicy::positive_sign:
        dir[0] = 1.0;
        break;
    }
    pair.y_prime.values[k] = y[k] + dir * magnitude;
  }
  pair.validate();
  return pair;
}

namespace detail {

// Sum_{k >= start} (k+1)^2 q^k for 0 <= q < 1, in closed form:
// q^s [ (1+q)/(1-q)^3 + 2s/(1-q)^2 + s^2/(1-q) ] with s = start.
inline double quadratic_geometric_tail(double q, int start) {
  const double one_minus = 1.0 - q;
  const double s = static_cast<double>(start);
  return std::pow(q, s) *
         ((1.0 + q) / (one_minus * one_minus * one_minus) +
          2.0 * s / (one_minus * one_minus) + s * s / one_minus);
}

}  // namespace detail

/// Certificate for truncating the squared response sum at `horizon`: the
/// discarded tail is at most (||L|| K)^2 sum_{k >= horizon} (k+1)^2 m^{2k}
/// with m = max(||A - LC||, alpha).
inline double empirical_tail_bound_squared(const ObserverSpec& spec,
                                           const AdjacencyParams& adj, int horizon) {
  const double N = spectral_norm(spec.error_dynamics());
  if (N >= 1.0) throw stability_error("tail bound undefined: ||A - LC|| >= 1");
  const double m = std::max(N, adj.alpha);
  const double scale = spectral_norm(spec.L) * adj.K;
  return scale * scale * detail::quadratic_geometric_tail(m * m, horizon);
}

/// Empirical l2 sensitivity: sqrt of the largest squared l2 distance between
/// observer responses over sampled adjacent pairs saturating the adjacency
/// inequality (zero initial state, k0 = 0). For p = 1 with L >= 0 and
/// A - LC >= 0 the constant-positive-sign deviation is the exact supremum,
/// so a single trial is used regardless of the requested budget.
inline double empirical_sensitivity(const ObserverSpec& spec, const AdjacencyParams& adj,
                                    int horizon, int trials, std::uint64_t seed) {
  if (horizon <= 0) throw domain_error("empirical_sensitivity: horizon must be positive");
  if (trials <= 0) throw domain_error("empirical_sensitivity: trials must be positive");

  const Matrix closed_loop = spec.error_dynamics();
  const double N = spectral_norm(closed_loop);
  if (N >= 1.0)
    throw stability_error("empirical_sensitivity: ||A - LC|| >= 1");

  const int p = spec.output_dim();
  const bool exact_aligned = p == 1 && is_nonnegative(spec.L) && is_nonnegative(closed_loop);
  const int effective_trials = exact_aligned ? 1 : trials;

  const double l_norm = spectral_norm(spec.L);

  double worst_sq = 0.0;
  std::mt19937_64 trial_gen(seed);
  for (int t = 0; t < effective_trials; ++t) {
    const std::uint64_t trial_seed = trial_gen();
    // Difference response: zeta(k+1) = (A-LC) zeta(k) + L d(k), zeta(0) = 0,
    // where d saturates the adjacency bound.
    Vector zeta(spec.state_dim());
    double sum_sq = 0.0;
    std::mt19937_64 dir_gen(trial_seed);
    for (int k = 0; k < horizon; ++k) {
      const double magnitude = adj.K * std::pow(adj.alpha, k);
      Vector d(p);
      if (exact_aligned)
        d[0] = magnitude;
      else
        d = detail::random_unit_vector(p, dir_gen()) * magnitude;
      zeta = closed_loop * zeta + spec.L * d;
      sum_sq += zeta.dot(zeta);
    }
    worst_sq = std::max(worst_sq, sum_sq);

    if (t == 0) {
      // ||zeta(k+1)|| <= ||L|| K (k+1) max(N, alpha)^k, so the discarded tail
      // of the squared sum is bounded by the closed-form quadratic-geometric
      // tail. Require it below 1e-9 of the partial sum.
      const double m = std::max(N, adj.alpha);
      const double scale = l_norm * adj.K;
      const double tail = scale * scale * detail::quadratic_geometric_tail(m * m, horizon);
      if (sum_sq > 0.0 && tail > 1e-9 * sum_sq)
        throw domain_error(
            "empirical_sensitivity: horizon too short for the requested tail accuracy");
    }
  }
  return std::sqrt(worst_sq);
}

/// Side-by-side record of the closed-form bound and the empirical estimate.
/// ratio = empirical^2 / bound^2; a ratio above 1 + 1e-6 means the proven
/// bound was violated, which can only be an implementation bug, so it is a
/// hard error. tail_bound_squared is the truncation certificate: the exact
/// supremum exceeds empirical_squared by at most that much.
struct BoundComparison {
  double bound_squared = 0.0;
  double empirical_squared = 0.0;
  double ratio = 0.0;
  double tail_bound_squared = 0.0;
  int horizon = 0;
  int trials = 0;
};

inline BoundComparison bound_vs_empirical_report(const ObserverSpec& spec,
                                                 const AdjacencyParams& adj, int horizon,
                                                 int trials, std::uint64_t seed) {
  BoundComparison report;
  report.horizon = horizon;
  report.trials = trials;
  report.bound_squared = l2_sensitivity_bound_squared(spec, adj).l2_bound_squared;
  report.tail_bound_squared = empirical_tail_bound_squared(spec, adj, horizon);
  const double emp = empirical_sensitivity(spec, adj, horizon, trials, seed);
  report.empirical_squared = emp * emp;
  report.ratio = report.bound_squared > 0.0
                     ? report.empirical_squared / report.bound_squared
                     : (report.empirical_squared > 0.0 ? std::numeric_limits<double>::infinity()
                                                       : 0.0);
  if (report.ratio > 1.0 + 1e-6)
    throw convergence_error("empirical sensitivity exceeded the proven bound");
  return report;
}

}  // namespace dpobs
