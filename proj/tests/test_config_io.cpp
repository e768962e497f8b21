#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "kinelo/config.hpp"
#include "kinelo/error.hpp"
#include "kinelo/io.hpp"

using namespace kinelo;

namespace {

std::string tmp_path(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(KINELO_TEST_TMP) / "config_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string read_all(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kPhysical = "model.c = 1.5\nmodel.gamma = 0.8\nmodel.diffusivity = 0.025\n";

}  // namespace

TEST_SUITE("config_io") {
  TEST_CASE("parse reads sections, comments and later overrides") {
    KeyValueConfig kv = KeyValueConfig::parse(std::string(kPhysical) +
                                              "# comment\n\ngrid.n = 40  # trailing\n"
                                              "grid.n = 50\nsolver.mode = nonlinear\n");
    const RunConfig cfg = resolve_config(kv);
    CHECK(cfg.model.c == 1.5);
    CHECK(cfg.model.gamma == 0.8);
    CHECK(cfg.model.diffusivity() == doctest::Approx(0.025));
    CHECK(cfg.grid.n_rho() == 50);
    kv.set_assignment("grid.n_R=30");
    CHECK(resolve_config(kv).grid.n_R() == 30);
  }

  TEST_CASE("unknown keys and malformed lines are rejected with the key named") {
    try {
      KeyValueConfig::parse("model.cc = 1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "model.cc");
    }
    CHECK_THROWS_AS(KeyValueConfig::parse("just text\n"), ConfigError);
    KeyValueConfig kv = KeyValueConfig::parse(kPhysical);
    kv.set("grid.n", "ten");
    try {
      resolve_config(kv);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "grid.n");
    }
  }

  TEST_CASE("missing physical parameters need use_defaults") {
    try {
      resolve_config(KeyValueConfig::parse("model.c = 1\nmodel.sigma = 0.3\n"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "model.gamma");
    }
    const RunConfig d = resolve_config(KeyValueConfig::parse("run.use_defaults = true\n"));
    CHECK(d.model.c == 1.0);
    CHECK(d.model.gamma == 1.0);
    CHECK(d.model.diffusivity() == doctest::Approx(0.05));
    CHECK_THROWS_AS(resolve_config(KeyValueConfig::parse("run.use_defaults=true\nmodel.sigma=1\nmodel.diffusivity=1\n")),
                    ConfigError);
  }

  TEST_CASE("value checks") {
    auto with = [](const std::string& extra) {
      return resolve_config(KeyValueConfig::parse(std::string(kPhysical) + extra));
    };
    CHECK_THROWS_AS(with("solver.cfl_safety = 2\n"), ConfigError);
    CHECK_THROWS_AS(with("solver.mode = linear_frozen\n"), ConfigError);
    CHECK_THROWS_AS(with("solver.splitting = sideways\n"), ConfigError);
    CHECK_THROWS_AS(with("run.threads = 0\n"), ConfigError);
    CHECK_THROWS_AS(with("grid.rho_max = -1\n"), ConfigError);
    CHECK_THROWS_AS(with("steady.damping = 0\n"), ConfigError);
    CHECK_NOTHROW(with("solver.rho_flux = donor_cell\n"));
  }

  TEST_CASE("canonical text lists every resolved key and is stable") {
    const RunConfig a = resolve_config(KeyValueConfig::parse(kPhysical));
    const RunConfig b = resolve_config(KeyValueConfig::parse(kPhysical));
    CHECK(canonical_text(a) == canonical_text(b));
    for (const std::string& key : known_keys()) {
      if (key == "model.sigma" || key == "model.diffusivity") continue;
      CHECK_MESSAGE(a.resolved.count(key) == 1, key);
    }
    // The canonical text resolves to the same configuration.
    KeyValueConfig again;
    for (const auto& [k, v] : a.resolved) {
      if (k != "model.sigma") again.set(k, v);
    }
    CHECK(canonical_text(resolve_config(again)) == canonical_text(a));
  }

  TEST_CASE("initial density specs") {
    const Grid2D g = Grid2D::unit_square(20);
    CHECK(mass(make_initial_density("uniform", g)) == doctest::Approx(1.0));
    const DensityField b = make_initial_density("box:0,0.5,0.5,1", g);
    CHECK(mass(b) == doctest::Approx(1.0));
    CHECK(b(15, 5) == 0.0);
    const DensityField gs = make_initial_density("gaussian:0.3,0.6,0.1", g);
    CHECK(center_of_mass(gs).first == doctest::Approx(0.3).epsilon(1e-3));
    CHECK_THROWS_AS(make_initial_density("box:0,1", g), ConfigError);
    CHECK_THROWS_AS(make_initial_density("spiral", g), ConfigError);
    const std::string path = tmp_path("init.csv");
    write_density_csv(path, gs);
    CHECK(test::l1(make_initial_density("file:" + path, g), gs) < 1e-14);
    CHECK_THROWS_AS(make_initial_density("file:" + path, Grid2D::unit_square(21)), ConfigError);
  }

  TEST_CASE("density CSV round trips bit for bit") {
    const Grid2D g(-0.5, 1.5, 13, 2.0, 3.0, 7);
    const DensityField f = test::random_density(g, 4);
    const std::string path = tmp_path("f.csv");
    write_density_csv(path, f);
    CHECK(read_all(path).rfind("rho,R,f\n", 0) == 0);
    const DensityField r = read_density_csv(path);
    CHECK(r.grid().n_rho() == 13);
    CHECK(r.grid().n_R() == 7);
    CHECK(r.grid().rho_min() == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(std::equal(r.values().begin(), r.values().end(), f.values().begin(), f.values().end()));
    CHECK_THROWS_AS(read_density_csv(tmp_path("missing.csv")), ConfigError);
  }

  TEST_CASE("agents CSV round trips and logs have their headers") {
    const AgentPopulation p = AgentPopulation::uniform(33, 0.0, 1.0, -1.0, 1.0, 5);
    const std::string path = tmp_path("agents.csv");
    write_agents_csv(path, p);
    CHECK(read_all(path).rfind("id,rho,R\n", 0) == 0);
    const AgentPopulation q = read_agents_csv(path);
    CHECK(q.rho == p.rho);
    CHECK(q.R == p.R);

    write_trace_csv(tmp_path("trace.csv"), {TraceRow{0, 0.0, 1.0, 0.0, 1.0}});
    CHECK(read_all(tmp_path("trace.csv")).rfind("step,t,mass,clipped_mass,max_f\n", 0) == 0);
    write_fixed_point_log(tmp_path("fp.csv"), {FixedPointLogRow{1, 0.5, 1.2, 1e-6}});
    CHECK(read_all(tmp_path("fp.csv")).rfind("outer_iter,norm_diff_beta,moment_beta,residual\n", 0) == 0);
    write_diagnostics_csv(tmp_path("diag.csv"), {DiagnosticsRow{}});
    CHECK(read_all(tmp_path("diag.csv")).rfind("t,E_phi_beta,E_inv_finf,beta_norm_diff,mass,com_rho,com_R\n", 0) == 0);
  }

  TEST_CASE("reals print with 17 significant digits") {
    CHECK(std::stod(format_real(0.1)) == 0.1);
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_real(0.1) == "0.10000000000000001");
  }

  TEST_CASE("git blob hash matches git hash-object") {
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  }

  TEST_CASE("environment variable overrides the output directory") {
    RunConfig cfg = resolve_config(KeyValueConfig::parse(std::string(kPhysical) + "run.output_dir = here\n"));
    ::unsetenv("KINELO_OUTPUT_DIR");
    CHECK(effective_output_dir(cfg) == "here");
    ::setenv("KINELO_OUTPUT_DIR", "/tmp/elsewhere", 1);
    CHECK(effective_output_dir(cfg) == "/tmp/elsewhere");
    ::unsetenv("KINELO_OUTPUT_DIR");
  }
}
