#pragma once

// Drivers shared by the CLI and the acceptance suite.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "kinelo/diagnostics.hpp"
#include "kinelo/fv_solver.hpp"
#include "kinelo/particles.hpp"
#include "kinelo/steady_state.hpp"

namespace kinelo {

struct ModeAnalysis {
  /// Plateau-merged local maxima (8-neighbourhood) above floor_rel * max.
  std::size_t local_maxima = 0;
  std::size_t argmax_i = 0;
  std::size_t argmax_j = 0;
  double max_value = 0.0;
  /// The global maximum is not in a boundary cell.
  bool interior = false;

  bool unimodal() const noexcept { return local_maxima == 1 && interior; }
};

ModeAnalysis analyze_modes(const DensityField& f, double floor_rel = 1e-6);

/// Records DiagnosticsRow entries against a fixed reference every `every`
/// steps (and at the final step when `final_step` is given).
class EnergyRecorder {
 public:
  EnergyRecorder(DensityField f_ref, double beta, double gamma, std::size_t every,
                 std::size_t final_step = 0);
  void operator()(std::size_t step, double t, const DensityField& f);
  const std::vector<DiagnosticsRow>& rows() const noexcept { return rows_; }
  StepObserver observer();

 private:
  DensityField ref_;
  BetaNorm norm_;
  EnergyWeight inv_;
  std::size_t every_;
  std::size_t final_step_;
  std::vector<DiagnosticsRow> rows_;
  DensityField prev_;
  bool has_prev_ = false;
};

/// v[k + 1] <= v[k] + slack over the last `fraction` of the entries.
bool nonincreasing_tail(const std::vector<double>& v, double fraction = 0.25,
                        double slack = 1e-10);

struct Fig1Result {
  SteadyStateResult steady;
  ModeAnalysis modes;
  std::pair<double, double> com{0.0, 0.0};
  double seconds = 0.0;
};

/// Nonlinear equilibration from the uniform density on the unit square.
Fig1Result reproduce_fig1(std::size_t n, const FixedPointConfig& cfg, const KernelParams& params);

struct Fig2Result {
  std::vector<DiagnosticsRow> rows;
  double T_eq = 0.0;
  DensityField f_ref;
  double drop_phi = 0.0;  // E(0) / E(T_eq), phi_beta weight
  double drop_inv = 0.0;  // same with 1 / f_ref
  bool tail_phi = false;  // final quarter nonincreasing
  bool tail_inv = false;
  double seconds = 0.0;
};

/// Equilibrates to T_eq, takes the state after a further T_eq / 2 as the
/// reference steady state, then re-runs [0, T_eq] recording both relative
/// energies every `every` steps.
Fig2Result reproduce_fig2(const DensityField& f0, const FixedPointConfig& cfg,
                          const KernelParams& params, std::size_t every);

struct SdePdeComparison {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double w1_rho = 0.0;
  double w1_R = 0.0;
};

/// Runs the mean-field SDE from n uniform samples on init_box up to t and
/// measures marginal W1 against `pde` (the PDE solution at the same time).
SdePdeComparison compare_sde_to_pde(const DensityField& pde, std::size_t n, std::uint64_t seed,
                                    double t, double dt, const KernelParams& params,
                                    const std::vector<double>& init_box, std::size_t threads = 1);

}  // namespace kinelo
