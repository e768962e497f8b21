#include "kinelo/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinelo/diagnostics.hpp"
#include "kinelo/error.hpp"

namespace kinelo {

void FixedPointConfig::validate() const {
  if (!(tol_state > 0.0)) throw ConfigError("steady.tol_state", "must be > 0");
  if (!(tol_map > 0.0)) throw ConfigError("steady.tol_map", "must be > 0");
  if (!(beta > 0.0)) throw ConfigError("steady.beta", "must be > 0");
  if (!(max_time > 0.0)) throw ConfigError("steady.max_time", "must be > 0");
  if (residual_stride == 0) throw ConfigError("steady.residual_stride", "must be positive");
  if (max_outer == 0) throw ConfigError("steady.max_outer", "must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("steady.damping", "must lie in (0, 1]");
}

SteadyStateResult equilibrate(const DensityField& f0, const FixedPointConfig& cfg,
                              const SolverConfig& solver, const KernelParams& params,
                              const StepObserver& observer) {
  cfg.validate();
  validate_density(f0);
  const Grid2D& grid = f0.grid();
  const double dt = resolve_dt(grid, solver, params);
  const BetaNorm norm(grid, cfg.beta, params.gamma);

  SteadyStateResult r;
  r.density = f0;
  r.dt = dt;
  DensityField& f = r.density;
  DensityField checkpoint = f;
  Stepper stepper(grid, solver, params);
  const double window = static_cast<double>(cfg.residual_stride) * dt;
  const auto max_steps = static_cast<std::size_t>(std::ceil(cfg.max_time / dt));

  auto trace = [&](std::size_t step, const StepStats& s) {
    if (solver.trace_every > 0 && step % solver.trace_every == 0) {
      r.trace.push_back({step, static_cast<double>(step) * dt, mass(f), s.clipped_mass,
                         f.max_value(), s.min_pre_clip});
    }
    if (observer) observer(step, static_cast<double>(step) * dt, f);
  };
  trace(0, {});

  for (std::size_t step = 1; step <= max_steps; ++step) {
    const StepStats s = stepper.step(f, dt);
    r.total_clipped_mass += s.clipped_mass;
    r.min_pre_clip = std::min(r.min_pre_clip, s.min_pre_clip);
    trace(step, s);
    if (step % cfg.residual_stride != 0) continue;
    r.residual = norm.distance(f, checkpoint) / window;
    r.residual_history.push_back({static_cast<double>(step) * dt, r.residual});
    checkpoint = f;
    if (r.residual < cfg.tol_state) {
      r.steps = step;
      r.time = static_cast<double>(step) * dt;
      if (solver.trace_every > 0 && step % solver.trace_every != 0) {
        r.trace.push_back({step, r.time, mass(f), s.clipped_mass, f.max_value(), s.min_pre_clip});
      }
      r.moment_beta = weighted_integral(f, LyapunovWeight{cfg.beta, params.gamma});
      return r;
    }
  }
  std::vector<double> hist;
  hist.reserve(r.residual_history.size());
  for (const auto& h : r.residual_history) hist.push_back(h.residual);
  std::ostringstream os;
  os << "no stationarity within t = " << cfg.max_time << " (residual " << r.residual
     << ", tolerance " << cfg.tol_state << ")";
  throw NonConvergenceError(os.str(), std::move(hist));
}

SteadyStateResult map_G(const DensityField& mu, const FixedPointConfig& cfg,
                        const KernelParams& params,
                        const std::optional<DensityField>& initial_guess) {
  validate_density(mu);
  if (std::abs(mass(mu) - 1.0) > 1e-8) throw ConfigError("mu", "map_G needs a probability density");
  SolverConfig solver = cfg.solver;
  solver.mode = SolverMode::kLinearFrozen;
  solver.frozen = mu;
  SteadyStateResult r = equilibrate(initial_guess ? *initial_guess : mu, cfg, solver, params);
  if (cfg.check_uniqueness) {
    const SteadyStateResult other =
        equilibrate(DensityField::uniform(mu.grid()), cfg, solver, params);
    r.uniqueness_gap = beta_norm(r.density - other.density, cfg.beta, params.gamma);
  }
  return r;
}

SteadyStateResult fixed_point_iterate(const DensityField& mu0, const FixedPointConfig& cfg,
                                      const KernelParams& params) {
  cfg.validate();
  const BetaNorm norm(mu0.grid(), cfg.beta, params.gamma);
  const LyapunovWeight w{cfg.beta, params.gamma};
  FixedPointConfig inner = cfg;
  inner.check_uniqueness = false;

  DensityField mu = mu0;
  std::vector<FixedPointLogRow> log;
  std::vector<double> moments{weighted_integral(mu, w)};
  std::vector<double> diffs;
  for (std::size_t k = 1; k <= cfg.max_outer; ++k) {
    SteadyStateResult g = map_G(mu, inner, params);
    const double diff = norm.distance(g.density, mu);
    log.push_back({k, diff, g.moment_beta, g.residual});
    diffs.push_back(diff);
    if (cfg.damping == 1.0) {
      mu = std::move(g.density);
    } else {
      mu *= 1.0 - cfg.damping;
      mu += cfg.damping * g.density;
    }
    moments.push_back(weighted_integral(mu, w));
    if (diff < cfg.tol_map) {
      SteadyStateResult again = map_G(mu, inner, params);
      SteadyStateResult r;
      r.map_residual = norm.distance(again.density, mu);
      r.density = std::move(mu);
      r.residual = g.residual;
      r.moment_beta = moments.back();
      r.outer_iterations = k;
      r.time = g.time;
      r.dt = g.dt;
      r.steps = g.steps;
      r.residual_history = std::move(g.residual_history);
      r.total_clipped_mass = g.total_clipped_mass;
      r.min_pre_clip = g.min_pre_clip;
      r.log = std::move(log);
      r.moment_sequence = std::move(moments);
      return r;
    }
  }
  std::ostringstream os;
  os << "fixed-point iteration did not reach " << cfg.tol_map << " in " << cfg.max_outer
     << " outer iterations (last increment " << diffs.back() << ")";
  throw NonConvergenceError(os.str(), std::move(diffs));
}

SteadyStateResult nonlinear_equilibrate(const DensityField& f0, const FixedPointConfig& cfg,
                                        const KernelParams& params, const StepObserver& observer) {
  if (std::abs(mass(f0) - 1.0) > 1e-8) {
    throw ConfigError("init", "initial density must have unit mass");
  }
  SolverConfig solver = cfg.solver;
  solver.mode = SolverMode::kNonlinear;
  solver.frozen.reset();
  return equilibrate(f0, cfg, solver, params, observer);
}

MomentExponent moment_map_exponent(const std::vector<DensityField>& family, double beta,
                                   const KernelParams& params, const FixedPointConfig& cfg) {
  if (family.size() < 3) throw ConfigError("family", "need at least three members");
  const LyapunovWeight w{beta, params.gamma};
  w.validate();
  MomentExponent out;
  for (const auto& mu : family) out.M.push_back(weighted_integral(mu, w));
  const auto [lo, hi] = std::minmax_element(out.M.begin(), out.M.end());
  if (!(*hi - *lo > 1e-9 * std::abs(*hi))) {
    throw ConfigError("family", "members share the same beta-moment; slope is undefined");
  }
  FixedPointConfig inner = cfg;
  inner.beta = beta;
  inner.check_uniqueness = false;
  for (const auto& mu : family) {
    out.GM.push_back(weighted_integral(map_G(mu, inner, params).density, w));
  }
  const std::size_t n = family.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(out.M[i]);
    my += std::log(out.GM[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(out.M[i]) - mx;
    sxy += dx * (std::log(out.GM[i]) - my);
    sxx += dx * dx;
  }
  out.eta_hat = sxy / sxx;
  out.below_one = out.eta_hat < 1.0;
  return out;
}

}  // namespace kinelo
