#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kinelo/fv_solver.hpp"
#include "kinelo/grid.hpp"
#include "kinelo/kernels.hpp"

namespace kinelo {

struct FixedPointConfig {
  /// Stationarity: stop when ||f_{t+D} - f_t||_beta / D < tol_state,
  /// D = residual_stride * dt.
  double tol_state = 1e-5;
  /// Outer stop: ||G(mu_k) - mu_k||_beta < tol_map.
  double tol_map = 1e-4;
  std::size_t max_outer = 50;
  double beta = 0.1;
  /// Horizon for a single equilibration; exceeding it is non-convergence.
  double max_time = 400.0;
  std::size_t residual_stride = 100;
  /// mu_{k+1} = (1 - damping) mu_k + damping G(mu_k).
  double damping = 1.0;
  /// map_G also runs from the uniform density and records the gap.
  bool check_uniqueness = false;
  /// dt, flux, splitting, threads, trace cadence. Mode and horizon are set
  /// by each operation.
  SolverConfig solver;

  /// Throws ConfigError on nonpositive tolerances, beta, stride or damping
  /// outside (0, 1].
  void validate() const;
};

struct ResidualSample {
  double t = 0.0;
  double residual = 0.0;
};

struct FixedPointLogRow {
  std::size_t outer_iter = 0;
  double norm_diff_beta = 0.0;  // ||G(mu_k) - mu_k||_beta
  double moment_beta = 0.0;     // int G(mu_k) phi_beta
  double residual = 0.0;        // stationarity residual of G(mu_k)
};

struct SteadyStateResult {
  DensityField density;
  double residual = 0.0;
  double moment_beta = 0.0;
  std::size_t outer_iterations = 0;
  /// Simulated time of the (last) equilibration.
  double time = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<ResidualSample> residual_history;
  std::vector<TraceRow> trace;
  double total_clipped_mass = 0.0;
  double min_pre_clip = 0.0;
  /// Fixed-point iteration only.
  std::vector<FixedPointLogRow> log;
  std::vector<double> moment_sequence;
  /// ||G(f*) - f*||_beta from one extra application of G.
  double map_residual = 0.0;
  /// ||G(mu) from mu - G(mu) from uniform||_beta when requested.
  std::optional<double> uniqueness_gap;
};

/// Time-marches f0 under `solver` until the stationarity residual drops
/// below cfg.tol_state. Throws NonConvergenceError carrying the residual
/// history when cfg.max_time is reached.
SteadyStateResult equilibrate(const DensityField& f0, const FixedPointConfig& cfg,
                              const SolverConfig& solver, const KernelParams& params,
                              const StepObserver& observer = {});

/// Steady state of the linear equation with coefficients frozen at mu,
/// marched from `initial_guess` (mu itself when absent).
SteadyStateResult map_G(const DensityField& mu, const FixedPointConfig& cfg,
                        const KernelParams& params,
                        const std::optional<DensityField>& initial_guess = std::nullopt);

/// Picard iteration of G with optional damping. Throws NonConvergenceError
/// with the ||mu_{k+1} - mu_k||_beta sequence after max_outer iterations.
SteadyStateResult fixed_point_iterate(const DensityField& mu0, const FixedPointConfig& cfg,
                                      const KernelParams& params);

/// Nonlinear time marching to stationarity.
SteadyStateResult nonlinear_equilibrate(const DensityField& f0, const FixedPointConfig& cfg,
                                        const KernelParams& params,
                                        const StepObserver& observer = {});

struct MomentExponent {
  double eta_hat = 0.0;
  bool below_one = false;
  std::vector<double> M;    // int mu_i phi_beta
  std::vector<double> GM;   // int G(mu_i) phi_beta
};

/// Least-squares slope of log int G(mu_i) phi_beta against log M_i.
/// Throws ConfigError for fewer than three members or coincident M_i.
MomentExponent moment_map_exponent(const std::vector<DensityField>& family, double beta,
                                   const KernelParams& params, const FixedPointConfig& cfg);

}  // namespace kinelo
