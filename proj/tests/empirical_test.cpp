#include "dpobs/empirical.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpobs/errors.hpp"
#include "oracles.hpp"

namespace {

using dpobs::AdjacencyParams;
using dpobs::DirectionPolicy;
using dpobs::Matrix;
using dpobs::ObserverSpec;
using dpobs::Trajectory;
using dpobs::Vector;

ObserverSpec example1() {
  return ObserverSpec(Matrix::from_rows({{0.25, 0.5}, {0.5, 1.0}}),
                      Matrix::from_rows({{1.0 / 3.0, 2.0 / 3.0}}),
                      Matrix::from_rows({{1.0 / 3.0}, {2.0 / 3.0}}));
}

TEST(SimulatePlant, ConstantAndZeroDynamics) {
  const Vector x0{0.3, -0.7};
  auto [states_id, outputs_id] =
      dpobs::simulate_plant(Matrix::identity(2), Matrix::from_rows({{1.0, 0.0}}), x0, 10);
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(states_id[k][i], x0[i]);
  EXPECT_DOUBLE_EQ(outputs_id[9][0], 0.3);

  auto [states_zero, outputs_zero] =
      dpobs::simulate_plant(Matrix(2, 2), Matrix::from_rows({{1.0, 1.0}}), x0, 5);
  for (int k = 1; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(states_zero[k][0], 0.0);
    EXPECT_DOUBLE_EQ(states_zero[k][1], 0.0);
  }
}

TEST(SimulatePlant, Example1OneStep) {
  const auto spec = example1();
  auto [states, outputs] = dpobs::simulate_plant(spec.A, spec.C, Vector{1.0, 0.0}, 3);
  EXPECT_DOUBLE_EQ(states[1][0], 0.25);
  EXPECT_DOUBLE_EQ(states[1][1], 0.5);
}

TEST(SimulatePlant, OverflowRaises) {
  const Matrix big = Matrix::from_rows({{1e200, 0.0}, {0.0, 1e200}});
  EXPECT_THROW(dpobs::simulate_plant(big, Matrix::from_rows({{1.0, 0.0}}), Vector{1.0, 1.0}, 5),
               dpobs::domain_error);
}

TEST(SimulateObserver, TruthInitializedTracksExactly) {
  const auto spec = example1();
  const Vector x0{0.8, 0.4};
  auto [states, outputs] = dpobs::simulate_plant(spec.A, spec.C, x0, 30);
  const Trajectory z = dpobs::simulate_observer(spec, outputs, x0);
  for (int k = 0; k < 30; ++k)
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(z[k][i], states[k][i], 1e-12);
}

TEST(SimulateObserver, ZeroGainIgnoresOutputs) {
  const ObserverSpec spec(Matrix::from_rows({{0.5, 0.0}, {0.0, 0.5}}),
                          Matrix::from_rows({{1.0, 0.0}}), Matrix(2, 1));
  Trajectory y;
  for (int k = 0; k < 8; ++k) y.values.push_back(Vector{double(k)});
  const Vector z0{1.0, 2.0};
  const Trajectory z = dpobs::simulate_observer(spec, y, z0);
  for (int k = 0; k < 8; ++k) {
    EXPECT_DOUBLE_EQ(z[k][0], std::pow(0.5, k) * 1.0);
    EXPECT_DOUBLE_EQ(z[k][1], std::pow(0.5, k) * 2.0);
  }
}

TEST(SimulateObserver, GeometricErrorDecayOnExample1) {
  // e(k+1) = (A - LC) e(k) exactly; in floating point the growing plant
  // state injects rounding noise of order eps * ||x(k)||, hence the additive
  // slack.
  const auto spec = example1();
  const Vector x0{1.0, 1.0};
  auto [states, outputs] = dpobs::simulate_plant(spec.A, spec.C, x0, 50);
  const Trajectory z = dpobs::simulate_observer(spec, outputs, Vector(2));
  double prev = (z[0] - states[0]).norm();
  for (int k = 1; k < 50; ++k) {
    const double err = (z[k] - states[k]).norm();
    EXPECT_LE(err, prev * (25.0 / 36.0 + 1e-9) + 1e-12 * (1.0 + states[k].norm()));
    prev = err;
  }
  // Fitted decay rate over the first 30 steps stays at the contraction level.
  const double err0 = (z[0] - states[0]).norm();
  const double err30 = (z[30] - states[30]).norm();
  EXPECT_LE(std::pow(err30 / err0, 1.0 / 30.0), 25.0 / 36.0 + 1e-6);
}

TEST(SimulateObserver, NoisePerturbsOnlyTheRelease) {
  const auto spec = example1();
  auto [states, outputs] = dpobs::simulate_plant(spec.A, spec.C, Vector{1.0, 0.5}, 20);
  const dpobs::NoiseSpec noise{0.3, 2, 77};
  const Trajectory clean = dpobs::simulate_observer(spec, outputs, Vector(2));
  const Trajectory released = dpobs::simulate_observer(spec, outputs, Vector(2), noise);
  const auto draws = dpobs::sample_noise(noise, 20);
  for (int k = 0; k < 20; ++k)
    for (int i = 0; i < 2; ++i)
      EXPECT_DOUBLE_EQ(released[k][i], clean[k][i] + draws[k][i]);
}

TEST(MakeAdjacentPair, ValidateCatchesViolations) {
  Trajectory y;
  for (int k = 0; k < 6; ++k) y.values.push_back(Vector{1.0});
  auto pair = dpobs::make_adjacent_pair(y, 2, AdjacencyParams(0.5, 0.5),
                                        DirectionPolicy::positive_sign);
  EXPECT_NO_THROW(pair.validate());
  auto broken_prefix = pair;
  broken_prefix.y_prime.values[0][0] += 0.1;  // differ before k0
  EXPECT_THROW(broken_prefix.validate(), dpobs::domain_error);
  auto broken_envelope = pair;
  broken_envelope.y_prime.values[5][0] += 1.0;  // exceed K alpha^(k-k0)
  EXPECT_THROW(broken_envelope.validate(), dpobs::domain_error);
}

TEST(BoundVsEmpirical, TailCertificateIsSmallAtHorizon400) {
  const auto report = dpobs::bound_vs_empirical_report(example1(), AdjacencyParams(1.0, 0.5),
                                                       400, 1, 3);
  EXPECT_GT(report.tail_bound_squared, 0.0);
  EXPECT_LT(report.tail_bound_squared, 1e-9 * report.empirical_squared);
}

TEST(MakeAdjacentPair, SaturatesTheInequality) {
  Trajectory y;
  for (int k = 0; k < 12; ++k) y.values.push_back(Vector{1.0, 2.0});
  const AdjacencyParams adj(0.8, 0.6);
  const auto pair = dpobs::make_adjacent_pair(y, 4, adj, DirectionPolicy::random_unit, 5);
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ((pair.y_prime[k] - pair.y[k]).norm(), 0.0);
  for (int k = 4; k < 12; ++k) {
    const double expected = 0.8 * std::pow(0.6, k - 4);
    EXPECT_NEAR((pair.y_prime[k] - pair.y[k]).norm(), expected, 1e-12);
  }
}

TEST(MakeAdjacentPair, AlphaZeroDeviatesOnlyAtK0) {
  Trajectory y;
  for (int k = 0; k < 6; ++k) y.values.push_back(Vector{0.0});
  const auto pair = dpobs::make_adjacent_pair(y, 2, AdjacencyParams(1.5, 0.0),
                                              DirectionPolicy::positive_sign);
  for (int k = 0; k < 6; ++k) {
    EXPECT_DOUBLE_EQ(pair.y_prime[k][0] - pair.y[k][0], k == 2 ? 1.5 : 0.0);
  }
}

TEST(MakeAdjacentPair, PositiveSignPolicyIsExact) {
  Trajectory y;
  for (int k = 0; k < 10; ++k) y.values.push_back(Vector{double(k)});
  const AdjacencyParams adj(0.5, 0.3);
  const auto pair = dpobs::make_adjacent_pair(y, 0, adj, DirectionPolicy::positive_sign);
  for (int k = 0; k < 10; ++k) {
    // y(k) grows with k, so the recovered small deviation loses the bits
    // below eps * |y(k)|.
    EXPECT_NEAR(pair.y_prime[k][0] - pair.y[k][0], 0.5 * std::pow(0.3, k), 1e-14 * (1.0 + k));
  }
  EXPECT_THROW(dpobs::make_adjacent_pair(y, 20, adj, DirectionPolicy::positive_sign),
               dpobs::domain_error);
}

TEST(EmpiricalSensitivity, ZeroGainGivesZero) {
  const ObserverSpec spec(Matrix::from_rows({{0.5, 0.1}, {0.0, 0.4}}),
                          Matrix::from_rows({{1.0, 0.0}}), Matrix(2, 1));
  EXPECT_DOUBLE_EQ(dpobs::empirical_sensitivity(spec, AdjacencyParams(1.0, 0.2), 100, 4, 1), 0.0);
}

TEST(EmpiricalSensitivity, Example1AlphaZeroClosedForm) {
  // (A-LC)^k L = (25/36)^k L makes the aligned-sign response exactly
  // ||L|| sqrt(sum N^{2k}) = sqrt(720/671).
  const double value = dpobs::empirical_sensitivity(example1(), AdjacencyParams(1.0, 0.0), 400, 1, 1);
  EXPECT_NEAR(value, std::sqrt(720.0 / 671.0), 1e-9);
}

TEST(EmpiricalSensitivity, Example1TightAgainstBound) {
  const AdjacencyParams adj(1.0, 0.5);
  const auto spec = example1();
  const double emp = dpobs::empirical_sensitivity(spec, adj, 400, 1, 1);
  const double bound_sq = dpobs::l2_sensitivity_bound_squared(spec, adj).l2_bound_squared;
  EXPECT_NEAR(emp * emp / bound_sq, 1.0, 5e-3);
  EXPECT_LE(emp * emp, bound_sq * (1.0 + 1e-6));
}

TEST(EmpiricalSensitivity, HorizonTooShortRejected) {
  const ObserverSpec spec(Matrix::from_rows({{0.98, 0.0}, {0.0, 0.5}}),
                          Matrix::from_rows({{0.5, 0.5}}),
                          Matrix::from_rows({{0.01}, {0.01}}));
  EXPECT_THROW(dpobs::empirical_sensitivity(spec, AdjacencyParams(1.0, 0.0), 5, 1, 1),
               dpobs::domain_error);
}

TEST(EmpiricalSensitivity, UnstableSpecRejected) {
  const ObserverSpec spec(Matrix::from_rows({{1.4, 0.0}, {0.0, 0.3}}),
                          Matrix::from_rows({{1.0, 0.0}}), Matrix(2, 1));
  EXPECT_THROW(dpobs::empirical_sensitivity(spec, AdjacencyParams(1.0, 0.0), 100, 1, 1),
               dpobs::stability_error);
}

TEST(EmpiricalSensitivity, K0InvarianceSpotCheck) {
  // The observer map is time invariant, so the saturated-pair response norm
  // does not depend on where the deviation starts.
  const auto spec = example1();
  const AdjacencyParams adj(1.0, 0.4);
  const int horizon = 200;
  double reference = -1.0;
  for (int k0 : {0, 3, 10}) {
    Trajectory y;
    for (int k = 0; k < horizon + k0; ++k) y.values.push_back(Vector{0.25 * k});
    const auto pair = dpobs::make_adjacent_pair(y, k0, adj, DirectionPolicy::positive_sign);
    const Trajectory z = dpobs::simulate_observer(spec, pair.y, Vector(2));
    const Trajectory z_prime = dpobs::simulate_observer(spec, pair.y_prime, Vector(2));
    double sum_sq = 0.0;
    for (int k = 0; k < horizon + k0; ++k) sum_sq += (z[k] - z_prime[k]).dot(z[k] - z_prime[k]);
    if (reference < 0.0)
      reference = sum_sq;
    else
      EXPECT_NEAR(sum_sq, reference, 1e-9 * reference);
  }
}

TEST(EmpiricalSensitivity, SuperpositionInTheOutput) {
  // z - z' depends only on y - y': shifting both trajectories by a common
  // offset leaves the difference untouched.
  const auto spec = example1();
  const AdjacencyParams adj(1.0, 0.3);
  Trajectory y;
  for (int k = 0; k < 40; ++k) y.values.push_back(Vector{std::sin(0.2 * k)});
  const auto pair = dpobs::make_adjacent_pair(y, 0, adj, DirectionPolicy::positive_sign);

  Trajectory shifted = pair.y, shifted_prime = pair.y_prime;
  for (int k = 0; k < 40; ++k) {
    shifted.values[k] += Vector{2.5};
    shifted_prime.values[k] += Vector{2.5};
  }
  const Trajectory d1_a = dpobs::simulate_observer(spec, pair.y, Vector(2));
  const Trajectory d1_b = dpobs::simulate_observer(spec, pair.y_prime, Vector(2));
  const Trajectory d2_a = dpobs::simulate_observer(spec, shifted, Vector(2));
  const Trajectory d2_b = dpobs::simulate_observer(spec, shifted_prime, Vector(2));
  for (int k = 0; k < 40; ++k)
    for (int i = 0; i < 2; ++i)
      EXPECT_NEAR(d1_a[k][i] - d1_b[k][i], d2_a[k][i] - d2_b[k][i], 1e-10);
}

TEST(EmpiricalSensitivity, ConvolutionFormMatchesRecursion) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = oracles::random_p1_instance(gen, 2 + trial % 2, false);
    const Vector l = oracles::random_feasible_gain(gen, inst);
    Matrix L(l.dim(), 1);
    for (int i = 0; i < l.dim(); ++i) L(i, 0) = l[i];
    const ObserverSpec spec(inst.A, inst.C, L);

    Trajectory y;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) y.values.push_back(Vector{unit(gen)});
    const Trajectory z = dpobs::simulate_observer(spec, y, Vector(l.dim()));

    const Matrix closed_loop = spec.error_dynamics();
    for (int k = 1; k < 50; ++k) {
      // z(k) = sum_{i=0}^{k-1} (A-LC)^{k-1-i} L y(i)
      Vector expected(l.dim());
      Matrix power = Matrix::identity(l.dim());
      for (int i = k - 1; i >= 0; --i) {
        expected += power * (spec.L * y[i]);
        power = power * closed_loop;
      }
      for (int r = 0; r < l.dim(); ++r) EXPECT_NEAR(z[k][r], expected[r], 1e-10);
    }
  }
}

TEST(BoundVsEmpirical, DominanceOnRandomInstances) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracles::random_p1_instance(gen, 2 + trial % 2, trial % 2 == 0);
    const Vector l = oracles::random_feasible_gain(gen, inst);
    Matrix L(l.dim(), 1);
    for (int i = 0; i < l.dim(); ++i) L(i, 0) = l[i];
    const ObserverSpec spec(inst.A, inst.C, L);
    const AdjacencyParams adj(0.7, 0.35);
    const auto report = dpobs::bound_vs_empirical_report(spec, adj, 400, 1, trial);
    EXPECT_GT(report.ratio, 0.0);
    EXPECT_LE(report.ratio, 1.0 + 1e-6);
  }
}

TEST(BoundVsEmpirical, MultiOutputLowerEstimateStaysBelow) {
  // p = 2: random unit directions give a lower estimate of the supremum.
  const Matrix A = Matrix::from_rows({{0.4, 0.1}, {0.2, 0.3}});
  const Matrix C = Matrix::identity(2);
  const Matrix L = Matrix::from_rows({{0.2, 0.05}, {0.1, 0.15}});
  const ObserverSpec spec(A, C, L);
  const auto report =
      dpobs::bound_vs_empirical_report(spec, AdjacencyParams(1.0, 0.2), 300, 64, 9);
  EXPECT_GT(report.empirical_squared, 0.0);
  EXPECT_LE(report.ratio, 1.0 + 1e-6);
}

}  // namespace
