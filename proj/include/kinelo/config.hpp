#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kinelo/fv_solver.hpp"
#include "kinelo/grid.hpp"
#include "kinelo/kernels.hpp"
#include "kinelo/particles.hpp"
#include "kinelo/steady_state.hpp"

namespace kinelo {

/// Flat `section.key = value` text with `#` comments. Later assignments
/// override earlier ones; overrides from the command line are applied last.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::string& path);

  /// Parses "key=value"; throws ConfigError on malformed input.
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct ParticleSettings {
  std::size_t n = 1000;
  std::size_t rounds = 1000;
  InteractionParams interaction;
  /// Initial agents uniform on this box: rho_lo, rho_hi, R_lo, R_hi.
  std::vector<double> init_box{0.0, 1.0, 0.0, 1.0};
};

struct SdeSettings {
  std::size_t n = 2000;
  double dt = 1e-3;
  double t_final = 0.5;
};

struct DiagnoseSettings {
  std::string f;      // density CSV to diagnose
  std::string f_inf;  // reference steady state CSV
  double M = 0.0;     // moment bound; 0 uses int f_inf phi_beta
  double C_prime = 2.0;
  double L = 0.0;     // drift box half-width; 0 uses 3 max(z1, z2)
  std::size_t n_eval = 400;
  std::size_t every = 100;  // diagnostics row cadence in steps
};

struct RunSettings {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string output_dir = "out";
  bool use_defaults = false;
  std::string simd = "auto";
};

/// Fully resolved configuration. `resolved` records the value used for every
/// known key, defaults included, as the text that would reproduce it.
struct RunConfig {
  KernelParams model;
  double beta = 0.1;
  Grid2D grid;
  SolverConfig solver;
  FixedPointConfig steady;
  std::string init = "uniform";
  std::string frozen;  // density CSV for linear_frozen mode
  ParticleSettings particles;
  SdeSettings sde;
  DiagnoseSettings diagnose;
  std::string compare_f, compare_g;
  RunSettings run;
  std::map<std::string, std::string> resolved;
};

/// Output directory after the KINELO_OUTPUT_DIR environment override.
std::string effective_output_dir(const RunConfig& cfg);

/// Resolves every key. Physical constants (model.c, model.gamma, and
/// model.sigma or model.diffusivity) must be given unless run.use_defaults
/// is true, in which case c = gamma = 1 and sigma^2/2 = 0.05. Unknown keys
/// and malformed values raise ConfigError naming the key.
RunConfig resolve_config(const KeyValueConfig& kv);

/// Sorted `key=value` lines of the resolved configuration.
std::string canonical_text(const RunConfig& cfg);

/// Builds the initial density from an `init` value:
///   uniform | box:rho_lo,rho_hi,R_lo,R_hi | gaussian:rho,R,sd | file:path
DensityField make_initial_density(const std::string& spec, const Grid2D& grid);

/// Every key resolve_config understands.
const std::set<std::string>& known_keys();

}  // namespace kinelo
