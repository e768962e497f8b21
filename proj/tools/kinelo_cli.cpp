// Command-line front end. Library errors map to exit codes:
// 2 configuration, 3 step restriction, 4 non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kinelo/config.hpp"
#include "kinelo/diagnostics.hpp"
#include "kinelo/error.hpp"
#include "kinelo/experiments.hpp"
#include "kinelo/io.hpp"
#include "kinelo/particles.hpp"
#include "kinelo/simd.hpp"
#include "kinelo/steady_state.hpp"

namespace {

using nlohmann::json;
using namespace kinelo;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
};

struct Context {
  RunConfig cfg;
  std::string out;
  std::string command;

  std::string path(const std::string& name) const { return (std::filesystem::path(out) / name).string(); }
};

Context load_context(const Common& c, const std::string& command,
                     const std::vector<std::string>& implied = {}) {
  KeyValueConfig kv = c.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config_path);
  for (const auto& a : implied) {
    const auto key = a.substr(0, a.find('='));
    const bool sigma_given = key == "model.diffusivity" && kv.has("model.sigma");
    if (!kv.has(key) && !sigma_given) kv.set_assignment(a);
  }
  for (const auto& o : c.overrides) kv.set_assignment(o);
  if (!c.output_dir.empty()) kv.set("run.output_dir", c.output_dir);
  Context ctx{resolve_config(kv), "", command};
  simd::set_backend(ctx.cfg.run.simd == "auto"
                        ? (simd::available(simd::Backend::kAvx2) ? simd::Backend::kAvx2
                                                                 : simd::Backend::kScalar)
                        : simd::parse_backend(ctx.cfg.run.simd));
  ctx.out = effective_output_dir(ctx.cfg);
  std::filesystem::create_directories(ctx.out);
  return ctx;
}

json params_json(const KernelParams& p) {
  return {{"c", p.c},
          {"gamma", p.gamma},
          {"sigma", p.sigma},
          {"diffusivity", p.diffusivity()},
          {"kernel", p.kind == KernelKind::kTanh ? "tanh" : "linear"}};
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_manifest(const Context& ctx, const json& extra = json::object()) {
  const std::string text = canonical_text(ctx.cfg);
  json m;
  m["command"] = ctx.command;
  m["config"] = ctx.cfg.resolved;
  m["content_hash"] = git_blob_sha1(text);
  m["simd_backend"] = std::string(simd::name(simd::kernels().backend));
  m["output_dir"] = ctx.out;
  if (!extra.empty()) m["summary"] = extra;
  write_json(ctx.path("manifest.json"), m);
}

DensityField load_frozen(const RunConfig& cfg) {
  DensityField mu = make_initial_density("file:" + cfg.frozen, cfg.grid);
  return mu;
}

int cmd_solve(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  SolverConfig s = c.solver;
  if (s.mode == SolverMode::kLinearFrozen) s.frozen = load_frozen(c);
  const DensityField f0 = make_initial_density(c.init, c.grid);

  std::optional<EnergyRecorder> rec;
  if (!c.diagnose.f_inf.empty()) {
    DensityField ref = make_initial_density("file:" + c.diagnose.f_inf, c.grid);
    const double dt = resolve_dt(c.grid, s, c.model);
    const auto steps = static_cast<std::size_t>(std::ceil(s.t_final / dt - 1e-9));
    rec.emplace(std::move(ref), c.beta, c.model.gamma, c.diagnose.every, steps);
  }
  const EvolutionTrace tr = evolve(f0, s, c.model, rec ? rec->observer() : StepObserver{});
  write_density_csv(ctx.path("density.csv"), tr.final_state);
  write_trace_csv(ctx.path("trace.csv"), tr.rows);
  for (const auto& snap : tr.snapshots) {
    write_density_csv(ctx.path("snapshots/step_" + std::to_string(snap.step) + ".csv"), snap.density);
  }
  if (rec) write_diagnostics_csv(ctx.path("diagnostics.csv"), rec->rows());
  json summary{{"dt", tr.dt},
               {"steps", tr.steps},
               {"t_final", c.solver.t_final},
               {"mass", mass(tr.final_state)},
               {"max_f", tr.final_state.max_value()},
               {"total_clipped_mass", tr.total_clipped_mass},
               {"min_pre_clip", tr.min_pre_clip}};
  write_manifest(ctx, summary);
  std::cout << summary.dump() << "\n";
  return 0;
}

json steady_summary(const SteadyStateResult& r) {
  json res = json::array();
  for (const auto& h : r.residual_history) res.push_back({h.t, h.residual});
  const auto [cr, cR] = center_of_mass(r.density);
  return {{"time", r.time},         {"dt", r.dt},
          {"steps", r.steps},       {"residual", r.residual},
          {"moment_beta", r.moment_beta},
          {"outer_iterations", r.outer_iterations},
          {"mass", mass(r.density)}, {"max_f", r.density.max_value()},
          {"com", {cr, cR}},        {"total_clipped_mass", r.total_clipped_mass},
          {"map_residual", r.map_residual},
          {"residual_history", res}};
}

int cmd_steady(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const DensityField f0 = make_initial_density(c.init, c.grid);
  SteadyStateResult r;
  if (c.solver.mode == SolverMode::kLinearFrozen) {
    r = map_G(load_frozen(c), c.steady, c.model, f0);
  } else {
    r = nonlinear_equilibrate(f0, c.steady, c.model);
  }
  write_density_csv(ctx.path("steady.csv"), r.density);
  write_trace_csv(ctx.path("trace.csv"), r.trace);
  json s = steady_summary(r);
  if (r.uniqueness_gap) s["uniqueness_gap"] = *r.uniqueness_gap;
  write_manifest(ctx, s);
  s.erase("residual_history");
  std::cout << s.dump() << "\n";
  return 0;
}

int cmd_fixedpoint(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const DensityField mu0 = make_initial_density(c.init, c.grid);
  const SteadyStateResult r = fixed_point_iterate(mu0, c.steady, c.model);
  write_density_csv(ctx.path("fixed_point.csv"), r.density);
  write_fixed_point_log(ctx.path("fixed_point_log.csv"), r.log);
  json s = steady_summary(r);
  s["moment_sequence"] = r.moment_sequence;
  write_manifest(ctx, s);
  s.erase("residual_history");
  std::cout << s.dump() << "\n";
  return 0;
}

json population_meta(const RunConfig& c, const HistogramResult& h, std::size_t n) {
  json j{{"seed", c.run.seed},
         {"n", n},
         {"params", params_json(c.model)},
         {"in_box_fraction", h.in_box_fraction},
         {"out_of_box", h.out_of_box}};
  if (!h.warning.empty()) j["warning"] = h.warning;
  return j;
}

int cmd_particles(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto& b = c.particles.init_box;
  AgentPopulation pop =
      AgentPopulation::uniform(c.particles.n, b[0], b[1], b[2], b[3], c.run.seed);
  write_agents_csv(ctx.path("agents_initial.csv"), pop);
  pop = run_tournament(std::move(pop), c.particles.rounds, c.particles.interaction, c.model,
                       c.run.threads);
  write_agents_csv(ctx.path("agents.csv"), pop);
  const HistogramResult h = histogram_density(pop, c.grid);
  write_density_csv(ctx.path("histogram.csv"), h.density);
  json meta = population_meta(c, h, pop.size());
  const auto& ip = c.particles.interaction;
  meta["interaction"] = {{"K0", ip.K0},         {"gamma_micro", ip.gamma_micro},
                         {"sigma0", ip.sigma0}, {"alpha0", ip.alpha0},
                         {"epsilon", ip.epsilon}, {"rounds", c.particles.rounds},
                         {"macro_time", static_cast<double>(c.particles.rounds) * ip.epsilon}};
  write_json(ctx.path("run.json"), meta);
  write_manifest(ctx, meta);
  if (!h.warning.empty()) std::cerr << "warning: " << h.warning << "\n";
  std::cout << meta.dump() << "\n";
  return 0;
}

int cmd_sde(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto& b = c.particles.init_box;
  AgentPopulation pop = AgentPopulation::uniform(c.sde.n, b[0], b[1], b[2], b[3], c.run.seed);
  pop = run_mean_field_sde(std::move(pop), c.sde.t_final, c.sde.dt, c.model, c.run.threads);
  write_agents_csv(ctx.path("agents.csv"), pop);
  const HistogramResult h = histogram_density(pop, c.grid);
  write_density_csv(ctx.path("histogram.csv"), h.density);
  json meta = population_meta(c, h, pop.size());
  meta["t_final"] = c.sde.t_final;
  meta["dt"] = c.sde.dt;
  write_json(ctx.path("run.json"), meta);
  write_manifest(ctx, meta);
  if (!h.warning.empty()) std::cerr << "warning: " << h.warning << "\n";
  std::cout << meta.dump() << "\n";
  return 0;
}

int cmd_diagnose(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.diagnose.f_inf.empty()) throw ConfigError("diagnose.f_inf", "a steady-state density file is required");
  const DensityField finf = read_density_csv(c.diagnose.f_inf);
  const LyapunovWeight w{c.beta, c.model.gamma};
  const double M = c.diagnose.M > 0.0 ? c.diagnose.M : weighted_integral(finf, w);
  const ConfinementRadii z =
      confinement_radii(M, c.beta, c.model.gamma, AssumptionConstants::for_tanh(c.model.c),
                        c.diagnose.C_prime);
  const double L = c.diagnose.L > 0.0 ? c.diagnose.L : 3.0 * std::max(z.z1, z.z2);
  const double ball = std::max(z.z1, std::max(1.0, 2.0 / c.model.gamma) * z.z2);
  const DriftCheckResult d =
      lyapunov_drift_check(finf, w, c.model, ball, Grid2D::centered_box(L, c.diagnose.n_eval));
  json cells = json::array();
  for (const auto& v : d.violations) cells.push_back({{"rho", v.rho}, {"R", v.R}, {"ratio", v.ratio}});
  json drift{{"lambda_hat", d.lambda_hat},     {"A_hat", d.A_hat},
             {"B_hat", d.B_hat},               {"violation_fraction", d.violation_fraction},
             {"violation_cells", cells},       {"exterior_ball", d.exterior_ball},
             {"Lambda_hat", d.Lambda_hat},     {"z3", d.z3},
             {"exterior_cells", d.exterior_cells}, {"box_half_width", L},
             {"success", d.success()},
             {"radii", {{"z1", z.z1}, {"z2", z.z2}, {"delta", z.delta},
                        {"delta_prime", z.delta_prime}, {"M", z.M}, {"C_prime", z.C_prime}}}};
  write_json(ctx.path("drift_check.json"), drift);

  json summary{{"drift_success", d.success()}, {"lambda_hat", d.lambda_hat},
               {"A_hat", d.A_hat}, {"B_hat", d.B_hat}, {"z1", z.z1}, {"z2", z.z2}};
  if (!c.diagnose.f.empty()) {
    const DensityField f = read_density_csv(c.diagnose.f);
    const RelativeEnergy ephi = relative_energy(f, finf, EnergyWeight::phi(c.beta, c.model.gamma));
    const RelativeEnergy einv = relative_energy(f, finf, EnergyWeight::inverse_steady_state());
    const auto [cr, cR] = center_of_mass(f);
    std::vector<DiagnosticsRow> rows{{0.0, ephi.value, einv.value, 0.0, mass(f), cr, cR}};
    write_diagnostics_csv(ctx.path("diagnostics.csv"), rows);
    summary["E_phi_beta"] = ephi.value;
    summary["E_inv_finf"] = einv.value;
    summary["excluded_mass"] = einv.excluded_mass;
  }
  write_manifest(ctx, summary);
  std::cout << summary.dump() << "\n";
  return 0;
}

bool is_agents_file(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  return header == "id,rho,R";
}

int cmd_compare(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.compare_f.empty() || c.compare_g.empty()) {
    throw ConfigError("compare.f", "compare needs compare.f and compare.g");
  }
  const DensityField g = read_density_csv(c.compare_g);
  json s;
  if (is_agents_file(c.compare_f)) {
    const AgentPopulation pop = read_agents_csv(c.compare_f);
    s = {{"kind", "agents_vs_density"},
         {"n", pop.size()},
         {"w1_rho", wasserstein1_samples(pop.rho, g, Axis::kRho)},
         {"w1_R", wasserstein1_samples(pop.R, g, Axis::kR)}};
  } else {
    const DensityField f = read_density_csv(c.compare_f);
    s = {{"kind", "density_vs_density"},
         {"w1_rho", wasserstein1_marginal(f, g, Axis::kRho)},
         {"w1_R", wasserstein1_marginal(f, g, Axis::kR)}};
    if (f.grid() == g.grid()) {
      s["beta_norm_diff"] = beta_norm(f - g, c.beta, c.model.gamma);
      s["l1_diff"] = relative_energy(f, g, EnergyWeight::phi(0.0, c.model.gamma)).value;
    }
  }
  write_json(ctx.path("compare.json"), s);
  write_manifest(ctx, s);
  std::cout << s.dump() << "\n";
  return 0;
}

int cmd_repro_fig1(const Context& ctx, bool full) {
  const RunConfig& c = ctx.cfg;
  json s;
  DensityField f;
  if (full) {
    // Full-resolution configuration: fixed step count, no stopping rule.
    SolverConfig sc = c.solver;
    sc.mode = SolverMode::kNonlinear;
    const EvolutionTrace tr = evolve(DensityField::uniform(c.grid), sc, c.model);
    f = tr.final_state;
    write_trace_csv(ctx.path("trace.csv"), tr.rows);
    s = {{"steps", tr.steps}, {"dt", tr.dt}, {"t_final", sc.t_final}};
  } else {
    const Fig1Result r = reproduce_fig1(c.grid.n_rho(), c.steady, c.model);
    f = r.steady.density;
    write_trace_csv(ctx.path("trace.csv"), r.steady.trace);
    s = steady_summary(r.steady);
    s.erase("residual_history");
    s["seconds"] = r.seconds;
  }
  const ModeAnalysis m = analyze_modes(f);
  const auto [cr, cR] = center_of_mass(f);
  s["unimodal"] = m.unimodal();
  s["local_maxima"] = m.local_maxima;
  s["interior_max"] = m.interior;
  s["max_f"] = m.max_value;
  s["com"] = {cr, cR};
  s["com_within_0.01"] = std::hypot(cr - 0.5, cR - 0.5) <= 0.01;
  write_density_csv(ctx.path("f_inf.csv"), f);
  write_manifest(ctx, s);
  std::cout << s.dump() << "\n";
  return 0;
}

int cmd_repro_fig2(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Fig2Result r = reproduce_fig2(make_initial_density(c.init, c.grid), c.steady, c.model,
                                      c.diagnose.every);
  write_diagnostics_csv(ctx.path("diagnostics.csv"), r.rows);
  write_density_csv(ctx.path("f_ref.csv"), r.f_ref);
  json s{{"T_eq", r.T_eq},         {"drop_phi", r.drop_phi}, {"drop_inv", r.drop_inv},
         {"tail_nonincreasing_phi", r.tail_phi}, {"tail_nonincreasing_inv", r.tail_inv},
         {"rows", r.rows.size()},  {"seconds", r.seconds}};
  write_manifest(ctx, s);
  std::cout << s.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic Elo model with learning: mean-field PDE, steady states, particles"};
  app.require_subcommand(1);
  Common common;
  bool full = false;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", common.config_path, "key=value configuration file");
    sub->add_option("--set", common.overrides, "override, e.g. --set solver.dt=1e-4 (repeatable)")
        ->allow_extra_args(false)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("-o,--output-dir", common.output_dir,
                    "output directory (KINELO_OUTPUT_DIR takes precedence)");
    return sub;
  };
  CLI::App* solve = add("solve", "evolve the PDE to solver.t_final");
  CLI::App* steady = add("steady", "equilibrate to a steady state (nonlinear or frozen)");
  CLI::App* fixedpoint = add("fixedpoint", "iterate the linearised steady-state map");
  CLI::App* particles = add("particles", "binary-interaction tournament");
  CLI::App* sde = add("sde", "mean-field SDE particle system");
  CLI::App* diagnose = add("diagnose", "drift check, confinement radii, relative energies");
  CLI::App* compare = add("compare", "W1 and weighted distances between two outputs");
  CLI::App* fig1 = add("repro-fig1", "steady state on the unit square from uniform data");
  fig1->add_flag("--full", full, "full resolution: h = 1/800, dt = 2e-6, 2e5 steps");
  CLI::App* fig2 = add("repro-fig2", "relative-energy decay traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  const std::vector<std::string> fig_defaults{"model.diffusivity=0.05", "model.c=1",
                                              "model.gamma=1", "grid.n=200"};
  try {
    if (*solve) return cmd_solve(load_context(common, "solve"));
    if (*steady) return cmd_steady(load_context(common, "steady"));
    if (*fixedpoint) return cmd_fixedpoint(load_context(common, "fixedpoint"));
    if (*particles) return cmd_particles(load_context(common, "particles"));
    if (*sde) return cmd_sde(load_context(common, "sde"));
    if (*diagnose) return cmd_diagnose(load_context(common, "diagnose"));
    if (*compare) return cmd_compare(load_context(common, "compare"));
    if (*fig1) {
      std::vector<std::string> implied = fig_defaults;
      if (full) {
        implied = {"model.diffusivity=0.05", "model.c=1", "model.gamma=1", "grid.n=800",
                   "solver.dt=2e-6", "solver.t_final=0.4", "solver.trace_every=1000"};
      }
      return cmd_repro_fig1(load_context(common, "repro-fig1", implied), full);
    }
    if (*fig2) {
      std::vector<std::string> implied = fig_defaults;
      implied.push_back("diagnose.every=10");
      return cmd_repro_fig2(load_context(common, "repro-fig2", implied));
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kConfigError);
  } catch (const CflError& e) {
    std::cerr << "time step error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kCflAbort);
  } catch (const NonConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << "\n";
    if (!e.history().empty()) std::cerr << "last monitored value: " << e.history().back() << "\n";
    return static_cast<int>(ExitCode::kNonConvergence);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
