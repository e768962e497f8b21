#pragma once

#include <span>

#include "kinelo/grid.hpp"

namespace kinelo {

enum class KernelKind {
  kTanh,    // b(z) = tanh(c z)
  kLinear,  // b(z) = c z; test oracle with a Gaussian steady state
};

/// Interaction kernel and model constants of the mean-field equation
///   d_t f = -d_R(a[f] f) + d_rho(sigma^2/2 d_rho f + gamma a1[f] f).
struct KernelParams {
  double c = 1.0;
  double gamma = 1.0;
  double sigma = 1.0;
  KernelKind kind = KernelKind::kTanh;

  /// sigma^2 / 2
  double diffusivity() const noexcept { return 0.5 * sigma * sigma; }
  /// sup |b|, infinite for the linear kernel.
  double b_sup() const noexcept;
  /// Throws ConfigError unless c, gamma, sigma > 0 (sigma == 0 allowed when
  /// allow_zero_sigma).
  void validate(bool allow_zero_sigma = false) const;
};

/// Constants in |1 - b(|z|)| <= C exp(-alpha <z>), <z> = sqrt(1 + z^2).
struct AssumptionConstants {
  double alpha = 2.0;
  double C_decay = 2.0;

  /// alpha = 2c, C = 2 exp(2c): 1 - tanh(x) <= 2 exp(-2x) and <z> <= 1 + |z|.
  static AssumptionConstants for_tanh(double c);

  /// True when the decay bound holds at every z in `zs`.
  bool holds_on(std::span<const double> zs, const KernelParams& params) const;
};

/// phi_beta(rho, R) = exp(beta sqrt(1 + 4 rho^2/gamma + 2 rho R + gamma R^2)).
/// The quadratic form has discriminant 4 - 16 < 0, so it is >= a positive
/// multiple of rho^2 + R^2 plus one, and phi_beta >= 1.
struct LyapunovWeight {
  double beta = 0.1;
  double gamma = 1.0;

  double quadratic_form(double rho, double R) const noexcept {
    return 1.0 + 4.0 * rho * rho / gamma + 2.0 * rho * R + gamma * R * R;
  }
  double operator()(double rho, double R) const noexcept;
  void validate() const;
};

double b_eval(double z, const KernelParams& params) noexcept;

/// Learning function h1(z) = 1 + b(z).
double h1_eval(double z, const KernelParams& params) noexcept;

double phi_beta(double rho, double R, const LyapunovWeight& w) noexcept;

/// a1[f](rho) = int b(rho - rho') f by midpoint quadrature over cell centres.
/// Throws ConfigError for negative cells or zero mass.
double a1_of_density(const DensityField& f, double rho, const KernelParams& params);

/// a2[f](R) = int b(R - R') f, the mirror of a1_of_density.
double a2_of_density(const DensityField& f, double R, const KernelParams& params);

/// Tabulates a1 and a2 at faces and centres from the marginals of f.
/// Each entry is a Toeplitz dot product against a tabulated kernel, so one
/// call costs O(n_rho^2 + n_R^2) with the active SIMD backend.
CoefficientField a_field(const DensityField& f, const KernelParams& params);

/// Same as a_field but from precomputed marginals (skips validation).
CoefficientField a_field_from_marginals(const Grid2D& grid, const Marginals& m,
                                        const KernelParams& params);

/// Throws ConfigError if f has a negative cell (below -tol) or zero mass.
void validate_density(const DensityField& f, double tol = 1e-14);

}  // namespace kinelo
