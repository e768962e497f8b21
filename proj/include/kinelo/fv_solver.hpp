#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "kinelo/grid.hpp"
#include "kinelo/kernels.hpp"

namespace kinelo {

enum class SolverMode {
  kNonlinear,     // coefficients from the evolving density
  kLinearFrozen,  // coefficients from a fixed measure mu
};

enum class Splitting {
  kRhoFirst,  // rho half-step, R full step, rho half-step
  kRFirst,    // R half-step, rho full step, R half-step
};

/// Flux for the rho drift-diffusion operator. Both are upwind-biased,
/// conservative, and positivity preserving under the step restriction.
enum class RhoFlux {
  kExponentialFitting,  // Scharfetter-Gummel; exact for locally constant drift
  kDonorCell,           // first-order upwind drift + centred diffusion
};

struct SolverConfig {
  /// Fixed time step; 0 derives one from the a-priori CFL bound.
  double dt = 0.0;
  double t_final = 0.0;
  double cfl_safety = 0.5;
  SolverMode mode = SolverMode::kNonlinear;
  /// The frozen measure for kLinearFrozen.
  std::optional<DensityField> frozen;
  Splitting splitting = Splitting::kRhoFirst;
  RhoFlux rho_flux = RhoFlux::kExponentialFitting;
  /// Keep a full snapshot every this many steps (0: none).
  std::size_t snapshot_every = 0;
  /// Append a trace row every this many steps.
  std::size_t trace_every = 1;
  std::size_t threads = 1;
  /// Undershoot below -clip_tolerance is recorded; clipped mass above
  /// clip_budget per step aborts.
  double clip_tolerance = 1e-14;
  double clip_budget = 1e-8;
};

struct StepStats {
  double min_pre_clip = 0.0;
  double clipped_mass = 0.0;
};

struct TraceRow {
  std::size_t step = 0;
  double t = 0.0;
  double mass = 0.0;
  double clipped_mass = 0.0;
  double max_f = 0.0;
  double min_pre_clip = 0.0;
};

struct Snapshot {
  std::size_t step = 0;
  double t = 0.0;
  DensityField density;
};

struct EvolutionTrace {
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  DensityField final_state;
  double dt = 0.0;
  std::size_t steps = 0;
  double total_clipped_mass = 0.0;
  double min_pre_clip = 0.0;
};

/// Called with (step, t, f) at step 0 and after every step.
using StepObserver = std::function<void(std::size_t, double, const DensityField&)>;

/// cfl_safety * min(h_R / max|a|, h_rho / (gamma max|a1|), h_rho^2 / sigma^2)
/// for the given coefficients.
double stable_dt(const Grid2D& grid, const CoefficientField& coeff,
                 const KernelParams& params, double cfl_safety);

/// Time step used by evolve(): cfg.dt when positive, otherwise the CFL bound
/// with |a1| <= sup|b| and |a| <= 2 sup|b| (box diameters for the linear kernel).
double resolve_dt(const Grid2D& grid, const SolverConfig& cfg, const KernelParams& params);

/// Donor-cell update along R with velocity a1(rho_i) - a2(R_face), zero flux
/// at the R walls. Throws CflError if a diagonal coefficient goes negative.
DensityField step_advect_R(const DensityField& f, const CoefficientField& coeff,
                           double dt);

/// Drift -gamma a1 plus diffusion sigma^2/2 along rho, zero flux at the rho
/// walls. Throws CflError if a diagonal coefficient goes negative.
DensityField step_drift_diffuse_rho(const DensityField& f, const CoefficientField& coeff,
                                    double dt, const KernelParams& params,
                                    RhoFlux flux = RhoFlux::kExponentialFitting);

/// Reusable stepping state (buffers, frozen coefficients).
class Stepper {
 public:
  Stepper(const Grid2D& grid, SolverConfig cfg, KernelParams params);

  /// One Strang step in place.
  StepStats step(DensityField& f, double dt);

  const SolverConfig& config() const noexcept { return cfg_; }
  const KernelParams& params() const noexcept { return params_; }

 private:
  void rho_substep(DensityField& f, double dt);
  void R_substep(DensityField& f, double dt);
  const CoefficientField& coefficients(const DensityField& f);
  StepStats clip(DensityField& f) const;

  Grid2D grid_;
  SolverConfig cfg_;
  KernelParams params_;
  CoefficientField coeff_;
  DensityField scratch_;
};

/// One Strang step (see Stepper).
DensityField strang_step(const DensityField& f, double dt, const SolverConfig& cfg,
                         const KernelParams& params);

/// Repeated Strang steps up to cfg.t_final with a uniform step that divides
/// the horizon.
EvolutionTrace evolve(const DensityField& f0, const SolverConfig& cfg,
                      const KernelParams& params, const StepObserver& observer = {});

}  // namespace kinelo
