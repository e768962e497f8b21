#include "kinelo/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "kinelo/error.hpp"
#include "kinelo/simd.hpp"

namespace kinelo {

double KernelParams::b_sup() const noexcept {
  return kind == KernelKind::kTanh ? 1.0 : std::numeric_limits<double>::infinity();
}

void KernelParams::validate(bool allow_zero_sigma) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("model.c", "must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("model.gamma", "must be > 0");
  if (allow_zero_sigma ? !(sigma >= 0.0) : !(sigma > 0.0)) {
    throw ConfigError("model.sigma", allow_zero_sigma ? "must be >= 0" : "must be > 0");
  }
}

AssumptionConstants AssumptionConstants::for_tanh(double c) {
  return {2.0 * c, 2.0 * std::exp(2.0 * c)};
}

bool AssumptionConstants::holds_on(std::span<const double> zs,
                                   const KernelParams& params) const {
  for (double z : zs) {
    const double lhs = std::abs(1.0 - b_eval(std::abs(z), params));
    const double rhs = C_decay * std::exp(-alpha * std::sqrt(1.0 + z * z));
    if (lhs > rhs) return false;
  }
  return true;
}

double LyapunovWeight::operator()(double rho, double R) const noexcept {
  return std::exp(beta * std::sqrt(quadratic_form(rho, R)));
}

void LyapunovWeight::validate() const {
  if (!(beta >= 0.0)) throw ConfigError("model.beta", "must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("model.gamma", "must be > 0");
}

double b_eval(double z, const KernelParams& params) noexcept {
  return params.kind == KernelKind::kTanh ? std::tanh(params.c * z) : params.c * z;
}

double h1_eval(double z, const KernelParams& params) noexcept {
  return 1.0 + b_eval(z, params);
}

double phi_beta(double rho, double R, const LyapunovWeight& w) noexcept {
  return w(rho, R);
}

void validate_density(const DensityField& f, double tol) {
  double total = 0.0;
  for (double v : f.values()) {
    if (v < -tol) throw ConfigError("density", "negative cell value " + std::to_string(v));
    total += v;
  }
  if (!(total > 0.0)) throw ConfigError("density", "zero mass");
}

double a1_of_density(const DensityField& f, double rho, const KernelParams& params) {
  validate_density(f);
  const Grid2D& g = f.grid();
  const Marginals m = marginals(f);
  double s = 0.0;
  for (std::size_t i = 0; i < g.n_rho(); ++i) {
    s += b_eval(rho - g.rho_center(i), params) * m.rho[i];
  }
  return s * g.h_rho();
}

double a2_of_density(const DensityField& f, double R, const KernelParams& params) {
  validate_density(f);
  const Grid2D& g = f.grid();
  const Marginals m = marginals(f);
  double s = 0.0;
  for (std::size_t j = 0; j < g.n_R(); ++j) {
    s += b_eval(R - g.R_center(j), params) * m.R[j];
  }
  return s * g.h_R();
}

namespace {

// Values of sum_j b(x_i - y_j) w_j on a uniform axis where x_i - y_j is
// (i - j + offset) h. Weights are reversed so each output is one contiguous
// dot product: out[i] = dot(table + i, w_rev, n).
void toeplitz_apply(std::size_t n, std::size_t n_out, double h, double offset,
                    const std::vector<double>& w, const KernelParams& params,
                    std::vector<double>& out) {
  // i - j ranges over [-(n-1), n_out - 1]
  const std::size_t len = n + n_out - 1;
  std::vector<double> table(len);
  for (std::size_t t = 0; t < len; ++t) {
    const double d = static_cast<double>(t) - static_cast<double>(n - 1) + offset;
    table[t] = b_eval(d * h, params);
  }
  std::vector<double> w_rev(w.rbegin(), w.rend());
  const auto& k = simd::kernels();
  out.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) out[i] = k.dot(table.data() + i, w_rev.data(), n);
}

}  // namespace

CoefficientField a_field_from_marginals(const Grid2D& grid, const Marginals& m,
                                        const KernelParams& params) {
  const std::size_t nr = grid.n_rho(), nR = grid.n_R();
  std::vector<double> w_rho(nr), w_R(nR);
  for (std::size_t i = 0; i < nr; ++i) w_rho[i] = m.rho[i] * grid.h_rho();
  for (std::size_t j = 0; j < nR; ++j) w_R[j] = m.R[j] * grid.h_R();

  CoefficientField c;
  // faces: x_i - y_j = (i - j - 1/2) h
  toeplitz_apply(nr, nr + 1, grid.h_rho(), -0.5, w_rho, params, c.a1_at_rho_faces);
  toeplitz_apply(nR, nR + 1, grid.h_R(), -0.5, w_R, params, c.a2_at_R_faces);
  toeplitz_apply(nr, nr, grid.h_rho(), 0.0, w_rho, params, c.a1_at_rho_centers);
  toeplitz_apply(nR, nR, grid.h_R(), 0.0, w_R, params, c.a2_at_R_centers);
  return c;
}

CoefficientField a_field(const DensityField& f, const KernelParams& params) {
  validate_density(f);
  return a_field_from_marginals(f.grid(), marginals(f), params);
}

}  // namespace kinelo
