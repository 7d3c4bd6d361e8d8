#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dpobs/design.hpp"
#include "dpobs/empirical.hpp"
#include "dpobs/errors.hpp"
#include "dpobs/io.hpp"
#include "dpobs/mechanism.hpp"
#include "dpobs/sensitivity.hpp"

namespace dpobs::cli {

// Exit-code contract: 0 success, 1 input/domain error, 2 infeasible or
// unstable, 3 internal solver failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitSolver = 3;

namespace detail {

inline void write_design_result(io::JsonWriter& w, const DesignResult& result) {
  w.begin_object();
  w.key("status").value(to_string(result.status));
  w.key("L");
  io::write_matrix(w, result.L_opt);
  w.key("eta").value(result.eta);
  w.key("N").value(result.N);
  w.key("F").value(result.F_value);
  w.key("bound_squared").value(result.bound_squared);
  w.key("bound").value(std::sqrt(result.bound_squared));
  w.key("eta_min").value(result.eta_min);
  w.key("eta_max").value(result.eta_max);
  w.key("outer_evals").value(result.outer_evals);
  w.key("inner_iterations").value(result.inner_iterations);
  w.end_object();
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& states,
                                 const Trajectory& observer, const Trajectory& released) {
  const int n = states.dim();
  out << "step";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= n; ++i) out << ",z_" << i;
  for (int i = 1; i <= n; ++i) out << ",zhat_" << i;
  out << "\n";
  for (int k = 0; k < states.steps(); ++k) {
    out << k;
    for (int i = 0; i < n; ++i) out << ',' << io::format_double(states[k][i]);
    for (int i = 0; i < n; ++i) out << ',' << io::format_double(observer[k][i]);
    for (int i = 0; i < n; ++i) out << ',' << io::format_double(released[k][i]);
    out << "\n";
  }
}

struct SimulationArtifacts {
  Trajectory states;
  Trajectory observer;   // noise-free
  Trajectory released;   // observer + calibrated noise (equal when sigma = 0)
};

inline SimulationArtifacts roll_out(const SystemFile& sys, const Matrix& L, const Vector& x0,
                                    const Vector& z0, int steps, double sigma,
                                    std::uint64_t seed) {
  ObserverSpec spec(sys.A, sys.C, L);
  SimulationArtifacts artifacts;
  auto [states, outputs] = simulate_plant(sys.A, sys.C, x0, steps);
  artifacts.states = std::move(states);
  artifacts.observer = simulate_observer(spec, outputs, z0);
  if (sigma > 0.0) {
    NoiseSpec noise{sigma, spec.state_dim(), seed};
    artifacts.released = simulate_observer(spec, outputs, z0, noise);
  } else {
    artifacts.released = artifacts.observer;
  }
  return artifacts;
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Differentially private Luenberger observers for positive linear systems"};
  app.require_subcommand(1);

  std::string system_path, gain_path, csv_path, x0_text, z0_text;
  double K = 1.0, alpha = 0.0, epsilon = 1.0, delta = 0.05, delta_G = 0.0, sigma = -1.0;
  double fix_performance = -1.0;
  int grid = 64, horizon = 400, trials = 1024, steps = 100, dim = 1;
  std::uint64_t seed = 0;

  auto* analyze = app.add_subcommand("analyze",
      "Feasibility verdict and sensitivity bounds for a given gain");
  analyze->add_option("--system", system_path, "system JSON file (A, C)")->required();
  analyze->add_option("--gain", gain_path, "gain matrix JSON file (L)")->required();
  analyze->add_option("--K", K, "adjacency magnitude K > 0");
  analyze->add_option("--alpha", alpha, "adjacency decay rate in [0, 1)");

  auto* design = app.add_subcommand("design",
      "Minimize the l2 sensitivity bound over positive observer gains");
  design->add_option("--system", system_path, "system JSON file (A, C)")->required();
  design->add_option("--K", K, "adjacency magnitude K > 0");
  design->add_option("--alpha", alpha, "adjacency decay rate in [0, 1)");
  design->add_option("--grid", grid, "outer search grid points (default 64)");
  design->add_option("--seed", seed, "solver seed");
  design->add_option("--fix-performance", fix_performance,
                     "minimize ||L|| at contraction level eta_N instead");

  auto* calibrate_cmd = app.add_subcommand("calibrate",
      "Gaussian mechanism noise scale for a given sensitivity");
  calibrate_cmd->add_option("--epsilon", epsilon, "privacy epsilon > 0")->required();
  calibrate_cmd->add_option("--delta", delta, "privacy delta in (0, 0.5]")->required();
  calibrate_cmd->add_option("--delta-G", delta_G, "l2 sensitivity (or bound)")->required();
  calibrate_cmd->add_option("--dim", dim, "released vector dimension");
  calibrate_cmd->add_option("--seed", seed, "noise stream seed");

  auto* simulate = app.add_subcommand("simulate",
      "Roll out plant, observer and noisy release; write a CSV trajectory");
  simulate->add_option("--system", system_path, "system JSON file (A, C)")->required();
  simulate->add_option("--gain", gain_path, "gain matrix JSON file (L)")->required();
  simulate->add_option("--x0", x0_text, "initial state, comma separated")->required();
  simulate->add_option("--z0", z0_text, "initial observer state (default zero)");
  simulate->add_option("--steps", steps, "number of steps");
  simulate->add_option("--sigma", sigma, "noise std; omit to calibrate from the bound");
  simulate->add_option("--epsilon", epsilon, "privacy epsilon (for calibration)");
  simulate->add_option("--delta", delta, "privacy delta (for calibration)");
  simulate->add_option("--K", K, "adjacency magnitude (for calibration)");
  simulate->add_option("--alpha", alpha, "adjacency decay rate (for calibration)");
  simulate->add_option("--seed", seed, "noise stream seed");
  simulate->add_option("--csv", csv_path, "output CSV path")->required();

  auto* empirical_cmd = app.add_subcommand("empirical",
      "Empirical sensitivity versus the closed-form bound");
  empirical_cmd->add_option("--system", system_path, "system JSON file (A, C)")->required();
  empirical_cmd->add_option("--gain", gain_path, "gain matrix JSON file (L)")->required();
  empirical_cmd->add_option("--K", K, "adjacency magnitude K > 0");
  empirical_cmd->add_option("--alpha", alpha, "adjacency decay rate in [0, 1)");
  empirical_cmd->add_option("--horizon", horizon, "rollout horizon");
  empirical_cmd->add_option("--trials", trials, "random-direction trials (p > 1)");
  empirical_cmd->add_option("--seed", seed, "trial seed");

  auto* pipeline = app.add_subcommand("pipeline",
      "design -> calibrate -> simulate end to end");
  pipeline->add_option("--system", system_path, "system JSON file (A, C)")->required();
  pipeline->add_option("--K", K, "adjacency magnitude K > 0");
  pipeline->add_option("--alpha", alpha, "adjacency decay rate in [0, 1)");
  pipeline->add_option("--epsilon", epsilon, "privacy epsilon > 0");
  pipeline->add_option("--delta", delta, "privacy delta in (0, 0.5]");
  pipeline->add_option("--x0", x0_text, "initial state, comma separated")->required();
  pipeline->add_option("--steps", steps, "number of steps");
  pipeline->add_option("--grid", grid, "design grid points");
  pipeline->add_option("--seed", seed, "seed for solver and noise");
  pipeline->add_option("--csv", csv_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*analyze) {
      const SystemFile sys = io::load_system_file(system_path);
      const Matrix L = io::load_matrix_file(gain_path);
      const AdjacencyParams adj(K, alpha);
      ObserverSpec spec(sys.A, sys.C, L);
      const FeasibilityVerdict verdict = check_feasible(sys.A, sys.C, L);

      io::JsonWriter w;
      w.begin_object();
      w.key("feasibility").begin_object();
      w.key("lc_nonneg").value(verdict.lc_nonneg);
      w.key("a_minus_lc_nonneg").value(verdict.a_minus_lc_nonneg);
      w.key("contraction").value(verdict.contraction);
      w.key("N").value(verdict.N);
      w.key("feasible").value(verdict.feasible());
      w.end_object();
      w.key("sensitivity");
      if (verdict.contraction) {
        const SensitivityReport report = l2_sensitivity_bound_squared(spec, adj);
        w.begin_object();
        w.key("N").value(report.N);
        w.key("H").value(report.H_value);
        w.key("L_norm").value(report.L_norm);
        w.key("l2_bound_squared").value(report.l2_bound_squared);
        w.key("l2_bound").value(std::sqrt(report.l2_bound_squared));
        w.key("l1_bound");
        if (report.l1_bound)
          w.value(*report.l1_bound);
        else
          w.null();
        w.end_object();
      } else {
        w.null();
      }
      w.end_object();
      std::cout << w.str() << "\n";
      return verdict.feasible() ? kExitOk : kExitInfeasible;
    }

    if (*design) {
      const SystemFile sys = io::load_system_file(system_path);
      const AdjacencyParams adj(K, alpha);
      DesignOptions opts;
      opts.grid_points = grid;
      opts.seed = seed != 0 ? seed : opts.seed;
      const DesignResult result =
          fix_performance >= 0.0
              ? design_for_performance(sys.A, sys.C, fix_performance, adj, opts)
              : outer_minimize(sys.A, sys.C, adj, opts);
      io::JsonWriter w;
      detail::write_design_result(w, result);
      std::cout << w.str() << "\n";
      return result.status == DesignStatus::infeasible ? kExitInfeasible : kExitOk;
    }

    if (*calibrate_cmd) {
      const PrivacyParams priv(epsilon, delta);
      const NoiseSpec noise = calibrate(priv, delta_G, dim, seed);
      io::JsonWriter w;
      w.begin_object();
      w.key("kappa").value(kappa(priv));
      w.key("sigma").value(noise.sigma);
      w.key("epsilon").value(epsilon);
      w.key("delta").value(delta);
      w.key("delta_G").value(delta_G);
      w.end_object();
      std::cout << w.str() << "\n";
      return kExitOk;
    }

    if (*simulate) {
      const SystemFile sys = io::load_system_file(system_path);
      const Matrix L = io::load_matrix_file(gain_path);
      const Vector x0 = io::parse_vector_flag(x0_text);
      const Vector z0 = z0_text.empty() ? Vector(sys.A.rows()) : io::parse_vector_flag(z0_text);
      double sigma_used = sigma;
      if (sigma_used < 0.0) {
        const AdjacencyParams adj(K, alpha);
        ObserverSpec spec(sys.A, sys.C, L);
        const SensitivityReport report = l2_sensitivity_bound_squared(spec, adj);
        const PrivacyParams priv(epsilon, delta);
        sigma_used = kappa(priv) * std::sqrt(report.l2_bound_squared);
      }
      const auto artifacts = detail::roll_out(sys, L, x0, z0, steps, sigma_used, seed);
      std::ofstream csv(csv_path);
      if (!csv) throw domain_error("cannot open CSV output: " + csv_path);
      detail::write_trajectory_csv(csv, artifacts.states, artifacts.observer,
                                   artifacts.released);
      io::JsonWriter w;
      w.begin_object();
      w.key("csv").value(csv_path);
      w.key("steps").value(steps);
      w.key("sigma").value(sigma_used);
      w.end_object();
      std::cout << w.str() << "\n";
      return kExitOk;
    }

    if (*empirical_cmd) {
      const SystemFile sys = io::load_system_file(system_path);
      const Matrix L = io::load_matrix_file(gain_path);
      const AdjacencyParams adj(K, alpha);
      ObserverSpec spec(sys.A, sys.C, L);
      const BoundComparison report =
          bound_vs_empirical_report(spec, adj, horizon, trials, seed);
      io::JsonWriter w;
      w.begin_object();
      w.key("bound_squared").value(report.bound_squared);
      w.key("empirical_squared").value(report.empirical_squared);
      w.key("ratio").value(report.ratio);
      w.key("tail_bound_squared").value(report.tail_bound_squared);
      w.key("horizon").value(report.horizon);
      w.key("trials").value(report.trials);
      w.end_object();
      std::cout << w.str() << "\n";
      return kExitOk;
    }

    if (*pipeline) {
      const SystemFile sys = io::load_system_file(system_path);
      const AdjacencyParams adj(K, alpha);
      const PrivacyParams priv(epsilon, delta);
      const Vector x0 = io::parse_vector_flag(x0_text);
      DesignOptions opts;
      opts.grid_points = grid;
      opts.seed = seed != 0 ? seed : opts.seed;

      const DesignResult designed = outer_minimize(sys.A, sys.C, adj, opts);
      if (designed.status == DesignStatus::infeasible) {
        std::cerr << "pipeline: design stage found no feasible gain\n";
        return kExitInfeasible;
      }
      const double kap = kappa(priv);
      const double sigma_used = kap * std::sqrt(designed.bound_squared);

      const Vector z0(sys.A.rows());
      const auto artifacts = detail::roll_out(sys, designed.L_opt, x0, z0, steps,
                                              sigma_used, seed);
      std::ofstream csv(csv_path);
      if (!csv) throw domain_error("pipeline: cannot open CSV output: " + csv_path);
      detail::write_trajectory_csv(csv, artifacts.states, artifacts.observer,
                                   artifacts.released);

      const int last = artifacts.states.steps() - 1;
      const Vector final_error = artifacts.observer[last] - artifacts.states[last];

      io::JsonWriter w;
      w.begin_object();
      w.key("design");
      detail::write_design_result(w, designed);
      w.key("calibration").begin_object();
      w.key("kappa").value(kap);
      w.key("sigma").value(sigma_used);
      w.key("epsilon").value(epsilon);
      w.key("delta").value(delta);
      w.key("delta_G").value(std::sqrt(designed.bound_squared));
      w.end_object();
      w.key("simulation").begin_object();
      w.key("csv").value(csv_path);
      w.key("steps").value(steps);
      w.key("final_error_noise_free").value(final_error.norm());
      w.end_object();
      w.end_object();
      std::cout << w.str() << "\n";
      return kExitOk;
    }
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const stability_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const infeasible_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInput;
}

}  // namespace dpobs::cli
