#include "kinelo/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>

#include "kinelo/error.hpp"

namespace kinelo {

ModeAnalysis analyze_modes(const DensityField& f, double floor_rel) {
  const Grid2D& g = f.grid();
  const long nr = static_cast<long>(g.n_rho()), nR = static_cast<long>(g.n_R());
  ModeAnalysis m;
  m.max_value = f.max_value();
  const auto vals = f.values();
  const auto arg = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  m.argmax_i = arg / g.n_R();
  m.argmax_j = arg % g.n_R();
  m.interior = m.argmax_i > 0 && m.argmax_i + 1 < g.n_rho() && m.argmax_j > 0 &&
               m.argmax_j + 1 < g.n_R();

  const double floor = floor_rel * m.max_value;
  auto at = [&](long i, long j) { return f(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
  std::vector<char> cand(vals.size(), 0);
  for (long i = 0; i < nr; ++i) {
    for (long j = 0; j < nR; ++j) {
      const double v = at(i, j);
      if (v < floor) continue;
      bool peak = true;
      for (long di = -1; di <= 1 && peak; ++di) {
        for (long dj = -1; dj <= 1; ++dj) {
          const long a = i + di, b = j + dj;
          if ((di || dj) && a >= 0 && a < nr && b >= 0 && b < nR && at(a, b) > v) {
            peak = false;
            break;
          }
        }
      }
      cand[static_cast<std::size_t>(i * nR + j)] = peak;
    }
  }
  // Count 8-connected components of candidate cells.
  std::vector<long> stack;
  for (long s = 0; s < nr * nR; ++s) {
    if (cand[static_cast<std::size_t>(s)] != 1) continue;
    ++m.local_maxima;
    stack.push_back(s);
    cand[static_cast<std::size_t>(s)] = 2;
    while (!stack.empty()) {
      const long c = stack.back();
      stack.pop_back();
      const long i = c / nR, j = c % nR;
      for (long di = -1; di <= 1; ++di) {
        for (long dj = -1; dj <= 1; ++dj) {
          const long a = i + di, b = j + dj;
          if (a < 0 || a >= nr || b < 0 || b >= nR) continue;
          const auto k = static_cast<std::size_t>(a * nR + b);
          if (cand[k] == 1) {
            cand[k] = 2;
            stack.push_back(a * nR + b);
          }
        }
      }
    }
  }
  return m;
}

EnergyRecorder::EnergyRecorder(DensityField f_ref, double beta, double gamma, std::size_t every,
                               std::size_t final_step)
    : ref_(std::move(f_ref)),
      norm_(ref_.grid(), beta, gamma),
      inv_(EnergyWeight::inverse_steady_state()),
      every_(std::max<std::size_t>(every, 1)),
      final_step_(final_step) {}

void EnergyRecorder::operator()(std::size_t step, double t, const DensityField& f) {
  if (step % every_ != 0 && step != final_step_) return;
  DiagnosticsRow r;
  r.t = t;
  r.E_phi_beta = norm_.distance(f, ref_);
  r.E_inv_finf = relative_energy(f, ref_, inv_).value;
  r.beta_norm_diff = has_prev_ ? norm_.distance(f, prev_) : 0.0;
  r.mass = mass(f);
  std::tie(r.com_rho, r.com_R) = center_of_mass(f);
  rows_.push_back(r);
  prev_ = f;
  has_prev_ = true;
}

StepObserver EnergyRecorder::observer() {
  return [this](std::size_t step, double t, const DensityField& f) { (*this)(step, t, f); };
}

bool nonincreasing_tail(const std::vector<double>& v, double fraction, double slack) {
  if (v.size() < 2) return true;
  const auto start = static_cast<std::size_t>(
      std::floor(static_cast<double>(v.size()) * (1.0 - fraction)));
  for (std::size_t k = std::max<std::size_t>(start, 1); k < v.size(); ++k) {
    if (v[k] > v[k - 1] + slack) return false;
  }
  return true;
}

Fig1Result reproduce_fig1(std::size_t n, const FixedPointConfig& cfg, const KernelParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  Fig1Result r;
  r.steady = nonlinear_equilibrate(DensityField::uniform(Grid2D::unit_square(n)), cfg, params);
  r.modes = analyze_modes(r.steady.density);
  r.com = center_of_mass(r.steady.density);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Fig2Result reproduce_fig2(const DensityField& f0, const FixedPointConfig& cfg,
                          const KernelParams& params, std::size_t every) {
  const auto t0 = std::chrono::steady_clock::now();
  Fig2Result out;
  FixedPointConfig quiet = cfg;
  quiet.solver.trace_every = 0;
  const SteadyStateResult eq = nonlinear_equilibrate(f0, quiet, params);
  out.T_eq = eq.time;

  SolverConfig s = quiet.solver;
  s.mode = SolverMode::kNonlinear;
  s.dt = eq.dt;
  s.t_final = 0.5 * eq.time;
  out.f_ref = evolve(eq.density, s, params).final_state;

  s.t_final = eq.time;
  const std::size_t steps = eq.steps;
  EnergyRecorder rec(out.f_ref, cfg.beta, params.gamma, every, steps);
  evolve(f0, s, params, rec.observer());
  out.rows = rec.rows();

  std::vector<double> phi, inv;
  for (const auto& r : out.rows) {
    phi.push_back(r.E_phi_beta);
    inv.push_back(r.E_inv_finf);
  }
  out.drop_phi = phi.front() / phi.back();
  out.drop_inv = inv.front() / inv.back();
  out.tail_phi = nonincreasing_tail(phi);
  out.tail_inv = nonincreasing_tail(inv);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SdePdeComparison compare_sde_to_pde(const DensityField& pde, std::size_t n, std::uint64_t seed,
                                    double t, double dt, const KernelParams& params,
                                    const std::vector<double>& box, std::size_t threads) {
  if (box.size() != 4) throw ConfigError("particles.init_box", "needs four numbers");
  AgentPopulation pop = AgentPopulation::uniform(n, box[0], box[1], box[2], box[3], seed);
  pop = run_mean_field_sde(std::move(pop), t, dt, params, threads);
  SdePdeComparison c;
  c.n = n;
  c.seed = seed;
  c.w1_rho = wasserstein1_samples(pop.rho, pde, Axis::kRho);
  c.w1_R = wasserstein1_samples(pop.R, pde, Axis::kR);
  return c;
}

}  // namespace kinelo
