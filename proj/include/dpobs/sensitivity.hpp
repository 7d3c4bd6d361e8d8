#pragma once

#include <cmath>
#include <optional>

#include "dpobs/errors.hpp"
#include "dpobs/linalg.hpp"
#include "dpobs/matrix.hpp"

namespace dpobs {

/// Adjacency relation on output sequences: the two sequences agree before
/// some step k0 and differ by at most K * alpha^(k - k0) afterwards.
struct AdjacencyParams {
  double K;
  double alpha;

  AdjacencyParams(double K_, double alpha_) : K(K_), alpha(alpha_) {
    if (!(K > 0.0) || !std::isfinite(K))
      throw domain_error("adjacency K must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw domain_error("adjacency alpha must lie in [0, 1)");
  }
};

/// Plant (A, C) together with an observer gain L, dimension-checked.
struct ObserverSpec {
  Matrix A;  // n x n
  Matrix C;  // p x n
  Matrix L;  // n x p

  ObserverSpec(Matrix A_, Matrix C_, Matrix L_)
      : A(std::move(A_)), C(std::move(C_)), L(std::move(L_)) {
    const int n = A.rows();
    if (A.cols() != n) throw domain_error("A must be square");
    if (C.cols() != n) throw domain_error("C must have as many columns as A");
    if (L.rows() != n || L.cols() != C.rows())
      throw domain_error("L must be n x p for C of shape p x n");
  }

  int state_dim() const { return A.rows(); }
  int output_dim() const { return C.rows(); }

  Matrix error_dynamics() const { return A - L * C; }
};

/// Contraction amplification factor H(N) = ((1+N alpha)/(1-N alpha)) / (1-N^2).
/// Strictly increasing on [0, 1) for every alpha in [0, 1).
inline double amplification_factor(double N, double alpha) {
  if (!(N >= 0.0 && N < 1.0)) throw domain_error("amplification_factor: N must lie in [0, 1)");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw domain_error("amplification_factor: alpha must lie in [0, 1)");
  return (1.0 + N * alpha) / (1.0 - N * alpha) / (1.0 - N * N);
}

/// Closed form of sum_{k>=0} (sum_{i=0}^k N^{k-i} alpha^i)^2 =
/// (1/(1-alpha^2)) * ((1+N alpha)/(1-N alpha)) * (1/(1-N^2)).
/// Exists to back the property test against truncated summation.
inline double series_closed_form(double N, double alpha) {
  if (!(N >= 0.0 && N < 1.0) || !(alpha >= 0.0 && alpha < 1.0))
    throw domain_error("series_closed_form: N and alpha must lie in [0, 1)");
  return amplification_factor(N, alpha) / (1.0 - alpha * alpha);
}

/// Sensitivity objective F(L) = ||L||^2 * H(||A - LC||). The full squared
/// bound is K^2/(1-alpha^2) * F(L).
inline double sensitivity_objective(const Matrix& L, const Matrix& A, const Matrix& C,
                                    double alpha) {
  const Matrix M = A - L * C;
  const double N = spectral_norm(M);
  if (N >= 1.0)
    throw stability_error("sensitivity objective undefined: ||A - LC|| >= 1");
  const double l_norm = spectral_norm(L);
  return l_norm * l_norm * amplification_factor(N, alpha);
}

/// Everything the l2 bound is assembled from, so callers can re-derive
/// l2_bound_squared = K^2/(1-alpha^2) * H_value * L_norm^2.
struct SensitivityReport {
  double N = 0.0;                 // ||A - LC||
  double l2_bound_squared = 0.0;  // bound on Delta(L)^2
  std::optional<double> l1_bound; // present only when ||A - LC||_1 < 1
  double H_value = 0.0;
  double L_norm = 0.0;
};

/// Upper bound on the squared l2 sensitivity of the Luenberger observer:
///   Delta(L)^2 <= K^2/(1-alpha^2) * ((1+N alpha)/(1-N alpha)) * ||L||^2/(1-N^2),
/// valid under the contraction hypothesis N = ||A - LC|| < 1 (checked).
inline SensitivityReport l2_sensitivity_bound_squared(const ObserverSpec& spec,
                                                      const AdjacencyParams& adj) {
  const Matrix M = spec.error_dynamics();
  SensitivityReport report;
  report.N = spectral_norm(M);
  if (report.N >= 1.0)
    throw stability_error("l2 sensitivity bound undefined: ||A - LC|| >= 1");
  report.L_norm = spectral_norm(spec.L);
  report.H_value = amplification_factor(report.N, adj.alpha);
  report.l2_bound_squared = adj.K * adj.K / (1.0 - adj.alpha * adj.alpha) *
                            report.H_value * report.L_norm * report.L_norm;

  const double n1 = induced_l1_norm(M);
  if (n1 < 1.0) {
    report.l1_bound =
        adj.K / (1.0 - adj.alpha) * induced_l1_norm(spec.L) / (1.0 - n1);
  }
  return report;
}

/// l1-norm analogue of the bound: Delta(L) <= K/(1-alpha) * ||L||_1/(1-||A-LC||_1),
/// with induced l1 matrix norms. Requires ||A - LC||_1 < 1.
inline double l1_sensitivity_bound(const ObserverSpec& spec, const AdjacencyParams& adj) {
  const double n1 = induced_l1_norm(spec.error_dynamics());
  if (n1 >= 1.0)
    throw stability_error("l1 sensitivity bound undefined: ||A - LC||_1 >= 1");
  return adj.K / (1.0 - adj.alpha) * induced_l1_norm(spec.L) / (1.0 - n1);
}

}  // namespace dpobs
