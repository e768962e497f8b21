#include "kinelo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinelo/error.hpp"
#include "kinelo/simd.hpp"

namespace kinelo {

RelativeEnergy relative_energy(const DensityField& f, const DensityField& f_inf,
                               const EnergyWeight& weight) {
  require_same_grid(f, f_inf);
  const Grid2D& g = f.grid();
  RelativeEnergy out;
  if (weight.kind == EnergyWeightKind::kPhiBeta) {
    const auto w = phi_beta_table(g, {weight.beta, weight.gamma});
    out.value = simd::kernels().weighted_abs_diff(w.data(), f.values().data(),
                                                  f_inf.values().data(), w.size());
    return out;
  }
  const double floor = weight.floor_rel * f_inf.max_value();
  const auto fv = f.values();
  const auto iv = f_inf.values();
  double s = 0.0, excluded = 0.0;
  for (std::size_t k = 0; k < fv.size(); ++k) {
    if (iv[k] < floor || iv[k] <= 0.0) {
      excluded += std::abs(fv[k]);
      ++out.excluded_cells;
      continue;
    }
    s += std::abs(fv[k] - iv[k]) / iv[k];
  }
  out.value = s * g.cell_area();
  out.excluded_mass = excluded * g.cell_area();
  return out;
}

std::vector<double> phi_beta_table(const Grid2D& grid, const LyapunovWeight& w) {
  w.validate();
  std::vector<double> t(grid.cells());
  const double area = grid.cell_area();
  for (std::size_t i = 0; i < grid.n_rho(); ++i) {
    const double rho = grid.rho_center(i);
    for (std::size_t j = 0; j < grid.n_R(); ++j) {
      t[i * grid.n_R() + j] = w(rho, grid.R_center(j)) * area;
    }
  }
  return t;
}

double beta_norm(const DensityField& f, double beta, double gamma) {
  return BetaNorm(f.grid(), beta, gamma)(f);
}

BetaNorm::BetaNorm(const Grid2D& grid, double beta, double gamma)
    : grid_(grid), weights_(phi_beta_table(grid, {beta, gamma})) {}

double BetaNorm::operator()(const DensityField& f) const {
  if (!(f.grid() == grid_)) throw ConfigError("grid", "beta norm evaluated on a different grid");
  return simd::kernels().weighted_abs_diff(weights_.data(), f.values().data(), nullptr,
                                           weights_.size());
}

double BetaNorm::distance(const DensityField& f, const DensityField& g) const {
  require_same_grid(f, g);
  if (!(f.grid() == grid_)) throw ConfigError("grid", "beta norm evaluated on a different grid");
  return simd::kernels().weighted_abs_diff(weights_.data(), f.values().data(),
                                           g.values().data(), weights_.size());
}

double generator_ratio(double rho, double R, double a1, double a2, const LyapunovWeight& w,
                       const KernelParams& params) {
  const double gamma = w.gamma;
  const double beta = w.beta;
  const double s = std::sqrt(w.quadratic_form(rho, R));
  const double drift = beta * (-3.0 * a1 * rho - gamma * a2 * R - a2 * rho) / s;
  const double grad = R + 4.0 * rho / gamma;
  const double diff = params.diffusivity() * (beta * (3.0 * R * R + 4.0 / gamma) / (s * s * s) +
                                              beta * beta * grad * grad / (s * s));
  return drift + diff;
}

namespace {

// a(x_k) = sum_i b(x_k - y_i) w_i h for each evaluation abscissa.
std::vector<double> coefficient_on(std::span<const double> xs, double y0, double hy,
                                   std::span<const double> marginal,
                                   const KernelParams& params) {
  std::vector<double> ys(marginal.size());
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = y0 + (static_cast<double>(i) + 0.5) * hy;
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) s += b_eval(xs[k] - ys[i], params) * marginal[i];
    out[k] = s * hy;
  }
  return out;
}

}  // namespace

DriftCheckResult lyapunov_drift_check(const DensityField& mu, const LyapunovWeight& w,
                                      const KernelParams& params, double exterior_ball,
                                      const Grid2D& eval) {
  validate_density(mu);
  w.validate();
  params.validate(true);
  const Grid2D& mg = mu.grid();
  Marginals m = marginals(mu);
  const double total = mass(mu);
  for (double& v : m.rho) v /= total;
  for (double& v : m.R) v /= total;

  std::vector<double> rhos(eval.n_rho()), Rs(eval.n_R());
  for (std::size_t i = 0; i < rhos.size(); ++i) rhos[i] = eval.rho_center(i);
  for (std::size_t j = 0; j < Rs.size(); ++j) Rs[j] = eval.R_center(j);
  const auto a1 = coefficient_on(rhos, mg.rho_min(), mg.h_rho(), m.rho, params);
  const auto a2 = coefficient_on(Rs, mg.R_min(), mg.h_R(), m.R, params);

  const std::size_t n = eval.cells();
  std::vector<double> ratio(n), radius(n);
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    for (std::size_t j = 0; j < Rs.size(); ++j) {
      const std::size_t k = i * Rs.size() + j;
      ratio[k] = generator_ratio(rhos[i], Rs[j], a1[i], a2[j], w, params);
      radius[k] = std::hypot(rhos[i], Rs[j]);
    }
  }

  DriftCheckResult r;
  r.cells = n;
  const double r_in = std::min({std::abs(eval.rho_min()), std::abs(eval.rho_max()),
                                std::abs(eval.R_min()), std::abs(eval.R_max())});
  double far = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (radius[k] >= 0.8 * r_in && radius[k] <= r_in) far = std::max(far, ratio[k]);
  }
  r.far_field_ratio = far;
  if (!std::isfinite(far) || far >= 0.0 || w.beta == 0.0) {
    // No confinement detected in the far field.
    r.violation_fraction = 1.0;
    return r;
  }
  r.Lambda_hat = -far / w.beta;
  r.lambda_hat = 0.5 * w.beta * r.Lambda_hat;
  const double sig2 = params.sigma * params.sigma;
  const double gamma = w.gamma;
  r.z3 = sig2 > 0.0 ? std::max(0.0, (r.Lambda_hat * gamma / (4.0 * sig2) - w.beta) /
                                        std::sqrt(2.0 / gamma + gamma / 2.0))
                    : 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    if (ratio[k] > -r.lambda_hat) r.B_hat = std::max(r.B_hat, radius[k]);
  }
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    for (std::size_t j = 0; j < Rs.size(); ++j) {
      const std::size_t k = i * Rs.size() + j;
      if (radius[k] <= r.B_hat) {
        r.A_hat = std::max(r.A_hat, w(rhos[i], Rs[j]) * (ratio[k] + r.lambda_hat));
      }
    }
  }

  r.exterior_ball = std::max(exterior_ball, r.z3);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    for (std::size_t j = 0; j < Rs.size(); ++j) {
      const std::size_t k = i * Rs.size() + j;
      if (radius[k] <= r.exterior_ball) continue;
      ++r.exterior_cells;
      if (ratio[k] > -r.lambda_hat) {
        ++bad;
        r.violations.push_back({rhos[i], Rs[j], ratio[k]});
      }
    }
  }
  r.violation_fraction =
      r.exterior_cells > 0 ? static_cast<double>(bad) / static_cast<double>(r.exterior_cells) : 0.0;
  return r;
}

ConfinementRadii confinement_radii(double M, double beta, double gamma,
                                   const AssumptionConstants& a, double C_prime) {
  if (!(beta > 0.0)) throw ConfigError("diagnose.beta", "must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("model.gamma", "must be > 0");
  if (!(a.alpha > 0.0)) throw ConfigError("diagnose.alpha", "must be > 0");
  if (!(4.0 * M * C_prime > 1.0)) {
    throw ConfigError("diagnose.M", "4 M C' must exceed 1 for positive radii");
  }
  const double s3 = std::sqrt(3.0);
  ConfinementRadii z;
  z.M = M;
  z.C_prime = C_prime;
  z.delta = 2.0 * a.alpha * beta * s3 / (a.alpha * std::sqrt(gamma) + beta * s3);
  z.delta_prime_statement =
      2.0 * a.alpha * beta * std::sqrt(3.0 * gamma) / (a.alpha * std::sqrt(gamma) + beta * s3);
  z.delta_prime_proof =
      4.0 * a.alpha * beta * std::sqrt(3.0 * gamma) / (2.0 * a.alpha + beta * std::sqrt(3.0 * gamma));
  z.delta_prime = std::min(z.delta_prime_statement, z.delta_prime_proof);
  const double L = std::log(4.0 * M * C_prime);
  z.z1 = L / z.delta;
  z.z2 = L / z.delta_prime;
  return z;
}

namespace {

struct AxisCdf {
  std::vector<double> faces;  // n + 1
  std::vector<double> cum;    // n + 1, cum[0] = 0, cum[n] = 1

  double operator()(double x) const {
    if (x <= faces.front()) return 0.0;
    if (x >= faces.back()) return 1.0;
    const auto it = std::upper_bound(faces.begin(), faces.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - faces.begin()) - 1;
    const double t = (x - faces[k]) / (faces[k + 1] - faces[k]);
    return cum[k] + t * (cum[k + 1] - cum[k]);
  }
};

AxisCdf axis_cdf(const DensityField& f, Axis axis) {
  const Grid2D& g = f.grid();
  const Marginals m = marginals(f);
  const auto& w = axis == Axis::kRho ? m.rho : m.R;
  const std::size_t n = w.size();
  AxisCdf c;
  c.faces.resize(n + 1);
  c.cum.assign(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) c.faces[k] = axis == Axis::kRho ? g.rho_face(k) : g.R_face(k);
  double total = 0.0;
  for (double v : w) {
    if (v < 0.0) throw ConfigError("density", "W1 of a signed marginal");
    total += v;
  }
  if (!(total > 0.0)) throw ConfigError("density", "W1 of a zero-mass field");
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    s += w[k];
    c.cum[k + 1] = s / total;
  }
  c.cum[n] = 1.0;
  return c;
}

// Integral over [0, h] of |d0 + (d1 - d0) t / h|.
double abs_linear_integral(double d0, double d1, double h) {
  if ((d0 >= 0.0) == (d1 >= 0.0)) return 0.5 * h * (std::abs(d0) + std::abs(d1));
  return 0.5 * h * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
}

}  // namespace

double wasserstein1_marginal(const DensityField& f, const DensityField& g, Axis axis) {
  const AxisCdf F = axis_cdf(f, axis);
  const AxisCdf G = axis_cdf(g, axis);
  std::vector<double> xs(F.faces);
  xs.insert(xs.end(), G.faces.begin(), G.faces.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double w1 = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    w1 += abs_linear_integral(F(xs[k]) - G(xs[k]), F(xs[k + 1]) - G(xs[k + 1]), xs[k + 1] - xs[k]);
  }
  return w1;
}

double wasserstein1_samples(std::span<const double> samples, const DensityField& f, Axis axis) {
  if (samples.empty()) throw ConfigError("samples", "W1 of an empty sample");
  const AxisCdf G = axis_cdf(f, axis);
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::vector<double> xs(G.faces);
  xs.insert(xs.end(), s.begin(), s.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const double n = static_cast<double>(s.size());
  double w1 = 0.0;
  std::size_t below = 0;  // samples <= xs[k]
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    while (below < s.size() && s[below] <= xs[k]) ++below;
    // Empirical CDF is constant on [xs[k], xs[k+1]).
    const double E = static_cast<double>(below) / n;
    w1 += abs_linear_integral(G(xs[k]) - E, G(xs[k + 1]) - E, xs[k + 1] - xs[k]);
  }
  return w1;
}

CoefficientGap coefficient_gap(const DensityField& mu1, const DensityField& mu2,
                               const KernelParams& params) {
  require_same_grid(mu1, mu2);
  const CoefficientField c1 = a_field(mu1, params);
  const CoefficientField c2 = a_field(mu2, params);
  auto sup = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s = std::max(s, std::abs(x[k] - y[k]));
    return s;
  };
  return {std::max(sup(c1.a1_at_rho_faces, c2.a1_at_rho_faces),
                   sup(c1.a1_at_rho_centers, c2.a1_at_rho_centers)),
          std::max(sup(c1.a2_at_R_faces, c2.a2_at_R_faces),
                   sup(c1.a2_at_R_centers, c2.a2_at_R_centers))};
}

ContinuityProbe semigroup_continuity_probe(const DensityField& mu1, const DensityField& mu2,
                                           const DensityField& nu, double t,
                                           const KernelParams& params,
                                           const SolverConfig& solver) {
  require_same_grid(mu1, nu);
  ContinuityProbe p;
  p.gap = coefficient_gap(mu1, mu2, params);
  SolverConfig cfg = solver;
  cfg.mode = SolverMode::kLinearFrozen;
  cfg.t_final = t;
  cfg.trace_every = 0;
  cfg.snapshot_every = 0;
  // Same step for both runs so the comparison isolates the coefficients.
  if (cfg.dt <= 0.0) cfg.dt = resolve_dt(nu.grid(), cfg, params);
  cfg.frozen = mu1;
  const DensityField f1 = evolve(nu, cfg, params).final_state;
  cfg.frozen = mu2;
  const DensityField f2 = evolve(nu, cfg, params).final_state;
  p.w1_rho = wasserstein1_marginal(f1, f2, Axis::kRho);
  p.w1_R = wasserstein1_marginal(f1, f2, Axis::kR);
  return p;
}

}  // namespace kinelo
