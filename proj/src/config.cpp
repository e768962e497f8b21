#include "kinelo/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kinelo/error.hpp"
#include "kinelo/io.hpp"

namespace kinelo {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  const auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || p != e || !std::isfinite(x)) {
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  }
  return x;
}

std::vector<double> parse_reals(const std::string& key, const std::string& v, std::size_t count) {
  const auto parts = split(v, ',');
  if (parts.size() != count) {
    throw ConfigError(key, "expected " + std::to_string(count) + " comma-separated numbers");
  }
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(parse_real(key, p));
  return out;
}

class Resolver {
 public:
  Resolver(const KeyValueConfig& kv, std::map<std::string, std::string>& out)
      : kv_(kv), out_(out) {}

  double real(const std::string& key, double def) {
    const auto v = kv_.get(key);
    const double x = v ? parse_real(key, *v) : def;
    out_[key] = format_real(x);
    return x;
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const auto v = kv_.get(key);
    std::size_t x = def;
    if (v) {
      const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
      if (ec != std::errc() || p != v->data() + v->size()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + *v + "'");
      }
    }
    out_[key] = std::to_string(x);
    return x;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    const auto v = kv_.get(key);
    std::uint64_t x = def;
    if (v) {
      const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
      if (ec != std::errc() || p != v->data() + v->size()) {
        throw ConfigError(key, "expected an unsigned integer, got '" + *v + "'");
      }
    }
    out_[key] = std::to_string(x);
    return x;
  }

  bool flag(const std::string& key, bool def) {
    const auto v = kv_.get(key);
    bool x = def;
    if (v) {
      if (*v == "true" || *v == "1" || *v == "yes") x = true;
      else if (*v == "false" || *v == "0" || *v == "no") x = false;
      else throw ConfigError(key, "expected true or false, got '" + *v + "'");
    }
    out_[key] = x ? "true" : "false";
    return x;
  }

  std::string text(const std::string& key, const std::string& def) {
    const auto v = kv_.get(key);
    std::string x = v ? *v : def;
    out_[key] = x;
    return x;
  }

  template <class T>
  T choice(const std::string& key, const std::string& def,
           const std::vector<std::pair<std::string, T>>& options) {
    const std::string s = text(key, def);
    for (const auto& [name, value] : options) {
      if (name == s) return value;
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + o.first;
    throw ConfigError(key, "expected one of " + allowed + ", got '" + s + "'");
  }

 private:
  const KeyValueConfig& kv_;
  std::map<std::string, std::string>& out_;
};

}  // namespace

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "model.c", "model.gamma", "model.sigma", "model.diffusivity", "model.kernel", "model.beta",
      "grid.rho_min", "grid.rho_max", "grid.R_min", "grid.R_max", "grid.n", "grid.n_rho",
      "grid.n_R",
      "solver.dt", "solver.t_final", "solver.cfl_safety", "solver.mode", "solver.frozen",
      "solver.splitting", "solver.rho_flux", "solver.snapshot_every", "solver.trace_every",
      "solver.clip_budget",
      "steady.tol_state", "steady.tol_map", "steady.max_outer", "steady.beta",
      "steady.max_time", "steady.residual_stride", "steady.damping", "steady.check_uniqueness",
      "init",
      "particles.n", "particles.rounds", "particles.K0", "particles.gamma_micro",
      "particles.sigma0", "particles.alpha0", "particles.epsilon", "particles.init_box",
      "sde.n", "sde.dt", "sde.t_final",
      "diagnose.f", "diagnose.f_inf", "diagnose.M", "diagnose.C_prime", "diagnose.L",
      "diagnose.n_eval", "diagnose.every",
      "compare.f", "compare.g",
      "run.seed", "run.threads", "run.output_dir", "run.use_defaults", "run.simd"};
  return keys;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
  KeyValueConfig kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      kv.set_assignment(line);
    } catch (const ConfigError& e) {
      throw ConfigError(e.field(), source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void KeyValueConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("config", "expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("config", "empty key");
  if (!known_keys().count(key)) throw ConfigError(key, "unknown configuration key");
  values_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string effective_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("KINELO_OUTPUT_DIR"); env && *env) return env;
  return cfg.run.output_dir;
}

RunConfig resolve_config(const KeyValueConfig& kv) {
  RunConfig cfg;
  Resolver r(kv, cfg.resolved);

  cfg.run.use_defaults = r.flag("run.use_defaults", false);
  auto physical = [&](const std::string& key, double def) {
    if (!kv.has(key) && !cfg.run.use_defaults) {
      throw ConfigError(key, "physical parameter is required (or set run.use_defaults=true)");
    }
    return r.real(key, def);
  };
  cfg.model.kind = r.choice<KernelKind>("model.kernel", "tanh",
                                        {{"tanh", KernelKind::kTanh}, {"linear", KernelKind::kLinear}});
  cfg.model.c = physical("model.c", 1.0);
  cfg.model.gamma = physical("model.gamma", 1.0);
  if (kv.has("model.sigma") && kv.has("model.diffusivity")) {
    throw ConfigError("model.diffusivity", "give model.sigma or model.diffusivity, not both");
  }
  if (kv.has("model.diffusivity")) {
    const double d = r.real("model.diffusivity", 0.0);
    if (!(d >= 0.0)) throw ConfigError("model.diffusivity", "must be >= 0");
    cfg.model.sigma = std::sqrt(2.0 * d);
    cfg.resolved["model.sigma"] = format_real(cfg.model.sigma);
  } else {
    cfg.model.sigma = physical("model.sigma", std::sqrt(0.1));
    cfg.resolved["model.diffusivity"] = format_real(cfg.model.diffusivity());
  }
  cfg.model.validate(/*allow_zero_sigma=*/true);
  cfg.beta = r.real("model.beta", 0.1);
  if (!(cfg.beta > 0.0)) throw ConfigError("model.beta", "must be > 0");

  const std::size_t n = r.count("grid.n", 200);
  cfg.grid = Grid2D(r.real("grid.rho_min", 0.0), r.real("grid.rho_max", 1.0),
                    r.count("grid.n_rho", n), r.real("grid.R_min", 0.0),
                    r.real("grid.R_max", 1.0), r.count("grid.n_R", n));

  SolverConfig& s = cfg.solver;
  s.dt = r.real("solver.dt", 0.0);
  if (s.dt < 0.0) throw ConfigError("solver.dt", "must be >= 0 (0 selects the CFL step)");
  s.t_final = r.real("solver.t_final", 1.0);
  if (!(s.t_final >= 0.0)) throw ConfigError("solver.t_final", "must be >= 0");
  s.cfl_safety = r.real("solver.cfl_safety", 0.5);
  if (!(s.cfl_safety > 0.0 && s.cfl_safety <= 1.0)) {
    throw ConfigError("solver.cfl_safety", "must lie in (0, 1]");
  }
  s.mode = r.choice<SolverMode>("solver.mode", "nonlinear",
                                {{"nonlinear", SolverMode::kNonlinear},
                                 {"linear_frozen", SolverMode::kLinearFrozen}});
  cfg.frozen = r.text("solver.frozen", "");
  if (s.mode == SolverMode::kLinearFrozen && cfg.frozen.empty()) {
    throw ConfigError("solver.frozen", "linear_frozen mode needs a frozen density file");
  }
  s.splitting = r.choice<Splitting>("solver.splitting", "rho_first",
                                    {{"rho_first", Splitting::kRhoFirst},
                                     {"R_first", Splitting::kRFirst}});
  s.rho_flux = r.choice<RhoFlux>("solver.rho_flux", "exponential_fitting",
                                 {{"exponential_fitting", RhoFlux::kExponentialFitting},
                                  {"donor_cell", RhoFlux::kDonorCell}});
  s.snapshot_every = r.count("solver.snapshot_every", 0);
  s.trace_every = r.count("solver.trace_every", 100);
  s.clip_budget = r.real("solver.clip_budget", 1e-8);

  FixedPointConfig& f = cfg.steady;
  f.tol_state = r.real("steady.tol_state", 1e-5);
  f.tol_map = r.real("steady.tol_map", 1e-4);
  f.max_outer = r.count("steady.max_outer", 50);
  f.beta = r.real("steady.beta", cfg.beta);
  f.max_time = r.real("steady.max_time", 400.0);
  f.residual_stride = r.count("steady.residual_stride", 100);
  f.damping = r.real("steady.damping", 1.0);
  f.check_uniqueness = r.flag("steady.check_uniqueness", false);
  f.validate();

  cfg.init = r.text("init", "uniform");

  ParticleSettings& p = cfg.particles;
  p.n = r.count("particles.n", 1000);
  p.rounds = r.count("particles.rounds", 1000);
  p.interaction.K0 = r.real("particles.K0", 1.0);
  p.interaction.gamma_micro = r.real("particles.gamma_micro", cfg.model.gamma);
  p.interaction.sigma0 = r.real("particles.sigma0", cfg.model.sigma);
  p.interaction.alpha0 = r.real("particles.alpha0", 0.0);
  p.interaction.epsilon = r.real("particles.epsilon", 0.01);
  p.interaction.validate();
  p.init_box = parse_reals("particles.init_box", r.text("particles.init_box", "0,1,0,1"), 4);

  cfg.sde.n = r.count("sde.n", 2000);
  cfg.sde.dt = r.real("sde.dt", 1e-3);
  if (!(cfg.sde.dt > 0.0)) throw ConfigError("sde.dt", "must be > 0");
  cfg.sde.t_final = r.real("sde.t_final", 0.5);

  DiagnoseSettings& d = cfg.diagnose;
  d.f = r.text("diagnose.f", "");
  d.f_inf = r.text("diagnose.f_inf", "");
  d.M = r.real("diagnose.M", 0.0);
  d.C_prime = r.real("diagnose.C_prime", 2.0);
  d.L = r.real("diagnose.L", 0.0);
  d.n_eval = r.count("diagnose.n_eval", 400);
  d.every = r.count("diagnose.every", 100);

  cfg.compare_f = r.text("compare.f", "");
  cfg.compare_g = r.text("compare.g", "");

  RunSettings& run = cfg.run;
  run.seed = r.u64("run.seed", 1);
  run.threads = r.count("run.threads", 1);
  if (run.threads == 0) throw ConfigError("run.threads", "must be positive");
  run.output_dir = r.text("run.output_dir", "out");
  run.simd = r.text("run.simd", "auto");
  s.threads = run.threads;
  f.solver = s;
  return cfg;
}

std::string canonical_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.resolved) out += k + "=" + v + "\n";
  return out;
}

DensityField make_initial_density(const std::string& spec, const Grid2D& grid) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "uniform") return DensityField::uniform(grid);
  if (kind == "box") {
    const auto b = parse_reals("init", args, 4);
    DensityField f = DensityField::from_function(grid, [&](double rho, double R) {
      return rho >= b[0] && rho < b[1] && R >= b[2] && R < b[3] ? 1.0 : 0.0;
    });
    return f;
  }
  if (kind == "gaussian") {
    const auto g = parse_reals("init", args, 3);
    if (!(g[2] > 0.0)) throw ConfigError("init", "gaussian width must be > 0");
    return DensityField::from_function(grid, [&](double rho, double R) {
      const double q = ((rho - g[0]) * (rho - g[0]) + (R - g[1]) * (R - g[1])) / (g[2] * g[2]);
      return std::exp(-0.5 * q);
    });
  }
  if (kind == "file") {
    DensityField f = read_density_csv(args);
    if (!(f.grid() == grid)) {
      // Compare with a tolerance: CSV round trips of the box are not exact.
      const Grid2D& h = f.grid();
      const double tol = 1e-9 * std::max(1.0, grid.rho_max() - grid.rho_min());
      if (h.n_rho() != grid.n_rho() || h.n_R() != grid.n_R() ||
          std::abs(h.rho_min() - grid.rho_min()) > tol || std::abs(h.R_min() - grid.R_min()) > tol ||
          std::abs(h.rho_max() - grid.rho_max()) > tol || std::abs(h.R_max() - grid.R_max()) > tol) {
        throw ConfigError("init", "density file grid does not match the configured grid");
      }
      f = DensityField(grid, std::vector<double>(f.values().begin(), f.values().end()));
    }
    return f;
  }
  throw ConfigError("init", "unknown initial condition '" + spec + "'");
}

}  // namespace kinelo
