#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>

#include "dpobs/errors.hpp"
#include "dpobs/matrix.hpp"

namespace dpobs {

namespace detail {

inline Vector random_unit_vector(int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (int i = 0; i < dim; ++i) v[i] = normal(gen);
    nrm = v.norm();
  }
  return v * (1.0 / nrm);
}

struct SymmetricEigen {
  Vector values;   // unordered
  Matrix vectors;  // column k is the eigenvector for values[k]
};

// Cyclic-by-rows Jacobi for small symmetric matrices. Used for the
// pseudo-inverse Gram factorization and as the exact fallback when the
// power iteration stalls on a clustered spectrum.
inline SymmetricEigen jacobi_eigen_symmetric(Matrix s) {
  const int n = s.rows();
  if (s.cols() != n) throw domain_error("jacobi: matrix must be square");
  Matrix v = Matrix::identity(n);

  double total = 0.0;
  for (double x : s.data()) total += x * x;

  const int max_sweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off <= 1e-28 * std::max(total, 1e-300)) {
      converged = true;
      break;
    }

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = s(p, q);
        if (apq == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (int k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw convergence_error("jacobi eigensolver did not converge");

  Vector values(n);
  for (int i = 0; i < n; ++i) values[i] = s(i, i);
  return {values, v};
}

}  // namespace detail

/// Top singular value with its left/right singular vectors. For a zero
/// matrix sigma is 0 and the vectors are zero.
struct SingularTriple {
  double sigma = 0.0;
  Vector left;
  Vector right;
};

/// Largest singular value and singular vectors of M, by power iteration on
/// the smaller of M^T M and M M^T. Converges when successive Rayleigh
/// quotients agree to 1e-14 relative; a start vector that lands in the null
/// space (Rayleigh quotient zero twice) triggers a reseeded restart.
///
/// When the top two singular values nearly coalesce (relative gap roughly in
/// [1e-8, 1e-3]) the Rayleigh criterion cannot fire within the 10,000
/// iteration cap; such points arise structurally at spectral-norm minimizers,
/// so instead of failing the computation falls through to the unconditionally
/// convergent Jacobi eigensolver, which is exact on any spectrum. A wrong
/// value is never returned silently.
inline SingularTriple top_singular_triple(const Matrix& m) {
  constexpr int kMaxIterations = 10000;
  constexpr int kMaxRestarts = 3;
  constexpr double kRelTol = 1e-14;

  const bool use_gram_right = m.cols() <= m.rows();  // iterate on M^T M vs M M^T
  const Matrix mt = m.transpose();
  const Matrix b = use_gram_right ? mt * m : m * mt;
  const int dim = b.rows();

  const auto finish = [&](double sigma, const Vector& gram_vec) {
    SingularTriple out;
    out.sigma = sigma;
    if (use_gram_right) {
      out.right = gram_vec;
      Vector mu = m * gram_vec;
      const double nrm = mu.norm();
      out.left = nrm > 0.0 ? mu * (1.0 / nrm) : Vector(m.rows());
    } else {
      out.left = gram_vec;
      Vector mv = mt * gram_vec;
      const double nrm = mv.norm();
      out.right = nrm > 0.0 ? mv * (1.0 / nrm) : Vector(m.cols());
    }
    return out;
  };

  bool power_iteration_stalled = false;
  for (int attempt = 0; attempt < kMaxRestarts; ++attempt) {
    Vector v = detail::random_unit_vector(dim, 0x5eedbull + attempt);
    double prev = -1.0;
    int zero_quotients = 0;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      const Vector w = b * v;
      const double rayleigh = v.dot(w);
      if (rayleigh <= 0.0) {
        if (++zero_quotients >= 2) break;  // restart from a different seed
        continue;
      }
      if (prev >= 0.0 && std::abs(rayleigh - prev) <= kRelTol * rayleigh)
        return finish(std::sqrt(rayleigh), v);
      prev = rayleigh;
      v = w * (1.0 / w.norm());
    }
    if (zero_quotients < 2) {
      power_iteration_stalled = true;
      break;
    }
  }

  if (power_iteration_stalled) {
    const auto eig = detail::jacobi_eigen_symmetric(b);
    int best = 0;
    for (int i = 1; i < dim; ++i)
      if (eig.values[i] > eig.values[best]) best = i;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = eig.vectors(i, best);
    return finish(std::sqrt(std::max(eig.values[best], 0.0)), v);
  }

  // Every restart found a zero Rayleigh quotient: the matrix is (numerically) zero.
  SingularTriple zero;
  zero.sigma = 0.0;
  zero.left = Vector(m.rows());
  zero.right = Vector(m.cols());
  return zero;
}

/// Spectral norm (largest singular value, the l2 induced norm).
inline double spectral_norm(const Matrix& m) { return top_singular_triple(m).sigma; }

/// Induced l1 matrix norm: maximum absolute column sum.
inline double induced_l1_norm(const Matrix& m) {
  double best = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    double col = 0.0;
    for (int i = 0; i < m.rows(); ++i) col += std::abs(m(i, j));
    best = std::max(best, col);
  }
  return best;
}

/// True iff every entry is >= -tol.
inline bool is_nonnegative(const Matrix& m, double tol = 1e-12) {
  if (tol < 0.0) throw domain_error("nonnegativity tolerance must be >= 0");
  for (double x : m.data())
    if (x < -tol) return false;
  return true;
}

/// Right pseudo-inverse C^+ = C^T (C C^T)^{-1} of a full-row-rank p x n
/// matrix (p <= n), so C C^+ = I_p. Raises rank_error when the smallest
/// singular value indicates rank deficiency.
inline Matrix pseudo_inverse(const Matrix& c) {
  const int p = c.rows();
  const int n = c.cols();
  if (p > n) throw rank_error("pseudo_inverse requires p <= n (full row rank)");

  const Matrix ct = c.transpose();
  const Matrix gram = c * ct;  // p x p symmetric PSD
  const auto eig = detail::jacobi_eigen_symmetric(gram);

  double lam_max = 0.0, lam_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p; ++i) {
    lam_max = std::max(lam_max, eig.values[i]);
    lam_min = std::min(lam_min, eig.values[i]);
  }
  const double sigma_max = std::sqrt(std::max(lam_max, 0.0));
  const double sigma_min = std::sqrt(std::max(lam_min, 0.0));
  if (sigma_min <= 1e-10 * std::max(1.0, sigma_max))
    throw rank_error("pseudo_inverse: matrix is rank deficient");

  // gram^{-1} = V diag(1/lambda) V^T
  Matrix gram_inv(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int k = 0; k < p; ++k)
        s += eig.vectors(i, k) * eig.vectors(j, k) / eig.values[k];
      gram_inv(i, j) = s;
    }
  return ct * gram_inv;
}

}  // namespace dpobs
