#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kinelo/fv_solver.hpp"
#include "kinelo/grid.hpp"
#include "kinelo/kernels.hpp"

namespace kinelo {

enum class EnergyWeightKind { kPhiBeta, kInverseSteadyState };

struct EnergyWeight {
  EnergyWeightKind kind = EnergyWeightKind::kPhiBeta;
  double beta = 0.1;
  double gamma = 1.0;
  /// For kInverseSteadyState: cells with f_inf < floor_rel * max(f_inf) are
  /// left out of the integral.
  double floor_rel = 1e-12;

  static EnergyWeight phi(double beta, double gamma) {
    return {EnergyWeightKind::kPhiBeta, beta, gamma, 0.0};
  }
  static EnergyWeight inverse_steady_state(double floor_rel = 1e-12) {
    return {EnergyWeightKind::kInverseSteadyState, 0.0, 1.0, floor_rel};
  }
};

struct RelativeEnergy {
  double value = 0.0;
  /// Mass of f on the excluded cells (inverse weight only).
  double excluded_mass = 0.0;
  std::size_t excluded_cells = 0;
};

/// E(f; f_inf) = int phi |f - f_inf| by midpoint quadrature.
RelativeEnergy relative_energy(const DensityField& f, const DensityField& f_inf,
                               const EnergyWeight& weight);

/// phi_beta at every cell centre times the cell area, in storage order.
std::vector<double> phi_beta_table(const Grid2D& grid, const LyapunovWeight& w);

/// ||f||_beta = int phi_beta |f|; f may be signed.
double beta_norm(const DensityField& f, double beta, double gamma);

/// ||f - g||_beta with a cached weight table.
class BetaNorm {
 public:
  BetaNorm(const Grid2D& grid, double beta, double gamma);
  double operator()(const DensityField& f) const;
  double distance(const DensityField& f, const DensityField& g) const;

 private:
  Grid2D grid_;
  std::vector<double> weights_;
};

/// L* phi_beta / phi_beta at (rho, R) for the linear equation with
/// coefficients a1 = a1[mu](rho), a2 = a2[mu](R), where
///   L* g = (a1 - a2) d_R g - gamma a1 d_rho g + sigma^2/2 d_rho^2 g.
/// With s^2 the quadratic form of phi_beta this is
///   beta (-3 a1 rho - gamma a2 R - a2 rho) / s
///   + sigma^2/2 (beta (3 R^2 + 4/gamma) / s^3 + beta^2 (R + 4 rho/gamma)^2 / s^2).
double generator_ratio(double rho, double R, double a1, double a2,
                       const LyapunovWeight& w, const KernelParams& params);

struct DriftCell {
  double rho = 0.0;
  double R = 0.0;
  double ratio = 0.0;
};

struct DriftCheckResult {
  double lambda_hat = 0.0;  // fitted rate in L* phi <= -lambda phi + A 1_{|x|<=B}
  double A_hat = 0.0;
  double B_hat = 0.0;
  double violation_fraction = 0.0;  // among cells beyond exterior_ball
  std::vector<DriftCell> violations;
  double exterior_ball = 0.0;  // max(requested ball, z3)
  double Lambda_hat = 0.0;     // far-field sup of -ratio / beta
  double z3 = 0.0;
  double far_field_ratio = 0.0;
  std::size_t exterior_cells = 0;
  std::size_t cells = 0;

  bool success() const noexcept { return lambda_hat > 0.0 && violation_fraction == 0.0; }
};

/// Evaluates L* phi_beta / phi_beta at every centre of eval_grid with a1[mu],
/// a2[mu] from the kernels module. Far field: the ring 0.8 r_in <= |x| <= r_in
/// of the inscribed disc gives Lambda_hat = -sup ratio / beta and
/// lambda_hat = beta Lambda_hat / 2. B_hat is the radius of the smallest
/// origin-centred ball containing every cell with ratio > -lambda_hat, and
/// A_hat = max over that ball of phi (ratio + lambda_hat).
DriftCheckResult lyapunov_drift_check(const DensityField& mu, const LyapunovWeight& w,
                                      const KernelParams& params, double exterior_ball,
                                      const Grid2D& eval_grid);

struct ConfinementRadii {
  double z1 = 0.0;
  double z2 = 0.0;
  double delta = 0.0;
  double delta_prime = 0.0;            // min of the two forms below
  double delta_prime_statement = 0.0;  // 2 alpha beta sqrt(3 gamma) / (alpha sqrt(gamma) + beta sqrt 3)
  double delta_prime_proof = 0.0;      // 4 alpha beta sqrt(3 gamma) / (2 alpha + beta sqrt(3 gamma))
  double M = 0.0;
  double C_prime = 0.0;
};

/// z1 = log(4 M C') / delta, z2 = log(4 M C') / delta' with
/// delta = 2 alpha beta sqrt 3 / (alpha sqrt(gamma) + beta sqrt 3).
/// Throws ConfigError when 4 M C' <= 1.
ConfinementRadii confinement_radii(double M, double beta, double gamma,
                                   const AssumptionConstants& assumption,
                                   double C_prime = 2.0);

enum class Axis { kRho, kR };

/// Exact 1D W1 between the (renormalised) marginals of f and g.
double wasserstein1_marginal(const DensityField& f, const DensityField& g, Axis axis);

/// Exact 1D W1 between an empirical measure and the marginal of f.
double wasserstein1_samples(std::span<const double> samples, const DensityField& f,
                            Axis axis);

struct CoefficientGap {
  double a1 = 0.0;  // sup over rho faces and centres
  double a2 = 0.0;
  double total() const noexcept { return a1 + a2; }
};

CoefficientGap coefficient_gap(const DensityField& mu1, const DensityField& mu2,
                               const KernelParams& params);

struct ContinuityProbe {
  double w1_rho = 0.0;
  double w1_R = 0.0;
  CoefficientGap gap;
  double distance() const noexcept { return w1_rho + w1_R; }
  double ratio() const noexcept { return gap.total() > 0.0 ? distance() / gap.total() : 0.0; }
};

/// Evolves nu under the frozen coefficients of mu1 and of mu2 up to t and
/// returns marginal W1 distances between the two results.
ContinuityProbe semigroup_continuity_probe(const DensityField& mu1, const DensityField& mu2,
                                           const DensityField& nu, double t,
                                           const KernelParams& params,
                                           const SolverConfig& solver = {});

/// One row of the per-run diagnostics CSV.
struct DiagnosticsRow {
  double t = 0.0;
  double E_phi_beta = 0.0;
  double E_inv_finf = 0.0;
  double beta_norm_diff = 0.0;  // ||f_t - f_prev||_beta against the previous row
  double mass = 0.0;
  double com_rho = 0.0;
  double com_R = 0.0;
};

}  // namespace kinelo
