// Designs a minimal-sensitivity positive observer for a small two-state
// system, calibrates Gaussian noise for (epsilon, delta) privacy, and rolls
// out a short private release.

#include <iostream>

#include "dpobs/dpobs.hpp"

int main() {
  using namespace dpobs;

  const Matrix A = Matrix::from_rows({{0.25, 0.5}, {0.5, 1.0}});
  const Matrix C = Matrix::from_rows({{1.0 / 3.0, 2.0 / 3.0}});

  const AdjacencyParams adj(/*K=*/0.5, /*alpha=*/0.2);
  const DesignResult design = outer_minimize(A, C, adj);
  std::cout << "gain norm " << design.eta << ", contraction " << design.N
            << ", bound^2 " << design.bound_squared << "\n";

  const PrivacyParams priv(/*epsilon=*/1.0, /*delta=*/0.05);
  const NoiseSpec noise =
      calibrate(priv, std::sqrt(design.bound_squared), A.rows(), /*seed=*/42);
  std::cout << "noise sigma " << noise.sigma << "\n";

  const Vector x0{1.0, 0.5};
  auto [states, outputs] = simulate_plant(A, C, x0, /*steps=*/30);
  ObserverSpec spec(A, C, design.L_opt);
  const Trajectory released = simulate_observer(spec, outputs, Vector(A.rows()), noise);
  std::cout << "released z(29) = (" << released[29][0] << ", " << released[29][1] << ")\n";
  return 0;
}
