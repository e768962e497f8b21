#include "kinelo/fv_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "kinelo/error.hpp"
#include "kinelo/simd.hpp"
#include "parallel.hpp"

namespace kinelo {
namespace {

constexpr double kDiagTolerance = -1e-12;

double bernoulli(double x) {
  if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

struct FaceCoefficients {
  std::vector<double> left;   // multiplies the density on the low side
  std::vector<double> right;  // multiplies the density on the high side
};

// Flux through rho face i is left[i] f_{i-1} - right[i] f_i, walls zero.
FaceCoefficients rho_face_coefficients(const Grid2D& g, const CoefficientField& c,
                                       const KernelParams& params, RhoFlux flux) {
  const std::size_t n = g.n_rho();
  FaceCoefficients fc{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
  const double h = g.h_rho();
  const double D = params.diffusivity();
  for (std::size_t i = 1; i < n; ++i) {
    const double u = -params.gamma * c.a1_at_rho_faces[i];
    if (flux == RhoFlux::kDonorCell || D == 0.0) {
      fc.left[i] = std::max(u, 0.0) + D / h;
      fc.right[i] = std::max(-u, 0.0) + D / h;
    } else {
      const double peclet = u * h / D;
      fc.left[i] = D / h * bernoulli(-peclet);
      fc.right[i] = D / h * bernoulli(peclet);
    }
  }
  return fc;
}

[[noreturn]] void throw_cfl(const char* op, double dt, double min_diag) {
  std::ostringstream os;
  os << op << ": time step " << dt << " violates the positivity restriction"
     << " (smallest diagonal coefficient " << min_diag << ")";
  throw CflError(os.str());
}

void rho_sweep(const DensityField& f, DensityField& out, const FaceCoefficients& fc,
               double dt, std::size_t threads) {
  const Grid2D& g = f.grid();
  const std::size_t n = g.n_rho(), m = g.n_R();
  const double k = dt / g.h_rho();
  double min_diag = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    min_diag = std::min(min_diag, 1.0 - k * (fc.right[i] + fc.left[i + 1]));
  }
  if (min_diag < kDiagTolerance) throw_cfl("rho drift-diffusion", dt, min_diag);
  const auto& kern = simd::kernels();
  detail::parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double cl = k * fc.left[i];
      const double cr = k * fc.right[i + 1];
      const double cc = std::max(0.0, 1.0 - k * (fc.right[i] + fc.left[i + 1]));
      const double* cur = f.row(i).data();
      const double* prev = i > 0 ? f.row(i - 1).data() : cur;
      const double* next = i + 1 < n ? f.row(i + 1).data() : cur;
      kern.stencil3(prev, cur, next, cl, cc, cr, out.row(i).data(), m);
    }
  });
}

void R_sweep(const DensityField& f, DensityField& out, const CoefficientField& c,
             double dt, std::size_t threads) {
  const Grid2D& g = f.grid();
  const std::size_t n = g.n_rho(), m = g.n_R();
  const double k = dt / g.h_R();
  const auto& kern = simd::kernels();
  double min_diag = 1.0;
  std::mutex mu;
  detail::parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
    std::vector<double> v(m + 1, 0.0);
    double local = 1.0;
    for (std::size_t i = b; i < e; ++i) {
      const double a1 = c.a1_at_rho_centers[i];
      for (std::size_t j = 1; j < m; ++j) v[j] = a1 - c.a2_at_R_faces[j];
      local = std::min(local, kern.upwind_row(f.row(i).data(), v.data(), k,
                                              out.row(i).data(), m));
    }
    std::lock_guard lock(mu);
    min_diag = std::min(min_diag, local);
  });
  if (min_diag < kDiagTolerance) throw_cfl("R advection", dt, min_diag);
}

double max_abs_a(const CoefficientField& c) {
  const auto [a1lo, a1hi] =
      std::minmax_element(c.a1_at_rho_centers.begin(), c.a1_at_rho_centers.end());
  const auto [a2lo, a2hi] = std::minmax_element(c.a2_at_R_faces.begin(), c.a2_at_R_faces.end());
  return std::max(std::abs(*a1hi - *a2lo), std::abs(*a2hi - *a1lo));
}

}  // namespace

double stable_dt(const Grid2D& grid, const CoefficientField& coeff,
                 const KernelParams& params, double cfl_safety) {
  double max_a1 = 0.0;
  for (double v : coeff.a1_at_rho_faces) max_a1 = std::max(max_a1, std::abs(v));
  const double inf = std::numeric_limits<double>::infinity();
  const double adv_R = max_abs_a(coeff) > 0.0 ? grid.h_R() / max_abs_a(coeff) : inf;
  const double adv_rho = max_a1 > 0.0 ? grid.h_rho() / (params.gamma * max_a1) : inf;
  const double sig2 = params.sigma * params.sigma;
  const double diff = sig2 > 0.0 ? grid.h_rho() * grid.h_rho() / sig2 : inf;
  return cfl_safety * std::min({adv_R, adv_rho, diff});
}

double resolve_dt(const Grid2D& grid, const SolverConfig& cfg, const KernelParams& params) {
  if (cfg.dt > 0.0) return cfg.dt;
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) {
    throw ConfigError("solver.cfl_safety", "must lie in (0, 1]");
  }
  double sup_a1 = params.b_sup();
  double sup_a = 2.0 * params.b_sup();
  if (params.kind == KernelKind::kLinear) {
    sup_a1 = params.c * (grid.rho_max() - grid.rho_min());
    sup_a = sup_a1 + params.c * (grid.R_max() - grid.R_min());
  }
  const double sig2 = params.sigma * params.sigma;
  const double inf = std::numeric_limits<double>::infinity();
  const double dt = cfg.cfl_safety *
                    std::min({grid.h_R() / sup_a, grid.h_rho() / (params.gamma * sup_a1),
                              sig2 > 0.0 ? grid.h_rho() * grid.h_rho() / sig2 : inf});
  return dt;
}

DensityField step_advect_R(const DensityField& f, const CoefficientField& coeff, double dt) {
  DensityField out(f.grid());
  R_sweep(f, out, coeff, dt, 1);
  return out;
}

DensityField step_drift_diffuse_rho(const DensityField& f, const CoefficientField& coeff,
                                    double dt, const KernelParams& params, RhoFlux flux) {
  DensityField out(f.grid());
  rho_sweep(f, out, rho_face_coefficients(f.grid(), coeff, params, flux), dt, 1);
  return out;
}

Stepper::Stepper(const Grid2D& grid, SolverConfig cfg, KernelParams params)
    : grid_(grid), cfg_(std::move(cfg)), params_(params), scratch_(grid) {
  params_.validate(/*allow_zero_sigma=*/true);
  if (cfg_.mode == SolverMode::kLinearFrozen) {
    if (!cfg_.frozen) throw ConfigError("solver.mode", "linear mode needs a frozen measure");
    if (!(cfg_.frozen->grid() == grid_)) {
      throw ConfigError("solver.frozen", "frozen measure lives on a different grid");
    }
    coeff_ = a_field(*cfg_.frozen, params_);
  }
}

const CoefficientField& Stepper::coefficients(const DensityField& f) {
  if (cfg_.mode == SolverMode::kNonlinear) {
    coeff_ = a_field_from_marginals(grid_, marginals(f), params_);
  }
  return coeff_;
}

void Stepper::rho_substep(DensityField& f, double dt) {
  const auto fc = rho_face_coefficients(grid_, coefficients(f), params_, cfg_.rho_flux);
  rho_sweep(f, scratch_, fc, dt, cfg_.threads);
  std::swap(f.storage(), scratch_.storage());
}

void Stepper::R_substep(DensityField& f, double dt) {
  R_sweep(f, scratch_, coefficients(f), dt, cfg_.threads);
  std::swap(f.storage(), scratch_.storage());
}

StepStats Stepper::clip(DensityField& f) const {
  StepStats s;
  double negative = 0.0;
  double min_v = 0.0;
  for (double v : f.values()) {
    if (v < 0.0) {
      negative -= v;
      min_v = std::min(min_v, v);
    }
  }
  s.min_pre_clip = min_v;
  if (negative == 0.0) return s;
  const double before = mass(f);
  for (double& v : f.values()) v = std::max(v, 0.0);
  s.clipped_mass = negative * grid_.cell_area();
  if (s.clipped_mass > cfg_.clip_budget) {
    std::ostringstream os;
    os << "clipped mass " << s.clipped_mass << " exceeds budget " << cfg_.clip_budget;
    throw CflError(os.str());
  }
  f.normalize(before);
  return s;
}

StepStats Stepper::step(DensityField& f, double dt) {
  if (dt == 0.0) return {};
  if (cfg_.splitting == Splitting::kRhoFirst) {
    rho_substep(f, 0.5 * dt);
    R_substep(f, dt);
    rho_substep(f, 0.5 * dt);
  } else {
    R_substep(f, 0.5 * dt);
    rho_substep(f, dt);
    R_substep(f, 0.5 * dt);
  }
  return clip(f);
}

DensityField strang_step(const DensityField& f, double dt, const SolverConfig& cfg,
                         const KernelParams& params) {
  Stepper stepper(f.grid(), cfg, params);
  DensityField out = f;
  stepper.step(out, dt);
  return out;
}

EvolutionTrace evolve(const DensityField& f0, const SolverConfig& cfg,
                      const KernelParams& params, const StepObserver& observer) {
  if (cfg.t_final < 0.0) throw ConfigError("solver.t_final", "must be >= 0");
  EvolutionTrace trace;
  trace.final_state = f0;
  DensityField& f = trace.final_state;

  const double dt_max = resolve_dt(f0.grid(), cfg, params);
  const std::size_t steps =
      cfg.t_final == 0.0
          ? 0
          : static_cast<std::size_t>(std::ceil(cfg.t_final / dt_max - 1e-9));
  const double dt = steps == 0 ? dt_max : cfg.t_final / static_cast<double>(steps);
  trace.dt = dt;
  trace.steps = steps;

  auto record = [&](std::size_t step, double t, const StepStats& s) {
    trace.total_clipped_mass += s.clipped_mass;
    trace.min_pre_clip = std::min(trace.min_pre_clip, s.min_pre_clip);
    const bool last = step == steps;
    if (cfg.trace_every > 0 && (step % cfg.trace_every == 0 || last)) {
      trace.rows.push_back({step, t, mass(f), s.clipped_mass, f.max_value(), s.min_pre_clip});
    }
    if (cfg.snapshot_every > 0 && (step % cfg.snapshot_every == 0 || last)) {
      trace.snapshots.push_back({step, t, f});
    }
    if (observer) observer(step, t, f);
  };

  record(0, 0.0, {});
  if (steps == 0) return trace;

  Stepper stepper(f0.grid(), cfg, params);
  for (std::size_t s = 1; s <= steps; ++s) {
    const StepStats st = stepper.step(f, dt);
    record(s, static_cast<double>(s) * dt, st);
  }
  return trace;
}

}  // namespace kinelo
