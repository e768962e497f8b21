#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kinelo/error.hpp"
#include "kinelo/fv_solver.hpp"
#include "kinelo/simd.hpp"

using namespace kinelo;

namespace {

KernelParams tanh_params(double diffusivity = 0.05) {
  return {1.0, 1.0, std::sqrt(2.0 * diffusivity), KernelKind::kTanh};
}

DensityField reflect(const DensityField& f) {
  const Grid2D& g = f.grid();
  DensityField r(g);
  for (std::size_t i = 0; i < g.n_rho(); ++i)
    for (std::size_t j = 0; j < g.n_R(); ++j) r(i, j) = f(g.n_rho() - 1 - i, g.n_R() - 1 - j);
  return r;
}

}  // namespace

TEST_SUITE("fv_solver") {
  TEST_CASE("property: mass conserved and no undershoot over random data") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const Grid2D g(-0.5 * static_cast<double>(seed % 3), 1.0, 24 + seed, 0.0, 1.0 + 0.2 * seed, 20);
      const DensityField f0 = test::random_density(g, seed, seed % 2 ? 0.0 : 0.1);
      SolverConfig cfg;
      cfg.t_final = 0.5;
      cfg.rho_flux = seed % 2 ? RhoFlux::kExponentialFitting : RhoFlux::kDonorCell;
      cfg.splitting = seed % 3 ? Splitting::kRhoFirst : Splitting::kRFirst;
      const EvolutionTrace tr = evolve(f0, cfg, tanh_params(0.02 * static_cast<double>(seed)));
      for (const auto& row : tr.rows) {
        CHECK(std::abs(row.mass - 1.0) <= 1e-10);
        CHECK(row.clipped_mass <= 1e-8);
      }
      CHECK(tr.min_pre_clip >= -1e-14);
      CHECK(tr.final_state.min_value() >= 0.0);
    }
  }

  TEST_CASE("a step larger than the bound raises CflError") {
    const DensityField f0 = DensityField::uniform(Grid2D::unit_square(40));
    SolverConfig cfg;
    cfg.dt = 0.05;
    cfg.t_final = 0.1;
    CHECK_THROWS_AS(evolve(f0, cfg, tanh_params()), CflError);
    cfg.dt = 0.9 * resolve_dt(f0.grid(), SolverConfig{}, tanh_params()) / 0.5;
    CHECK_NOTHROW(evolve(f0, cfg, tanh_params()));
  }

  TEST_CASE("resolved step respects each restriction") {
    const Grid2D g = Grid2D::unit_square(100);
    const KernelParams p = tanh_params(0.05);
    const double dt = resolve_dt(g, SolverConfig{}, p);
    CHECK(dt == doctest::Approx(0.5 * std::min({0.01 / 2.0, 0.01, 1e-4 / 0.1})));
    SolverConfig fixed;
    fixed.dt = 1e-5;
    CHECK(resolve_dt(g, fixed, p) == 1e-5);
    SolverConfig bad;
    bad.cfl_safety = 1.5;
    CHECK_THROWS_AS(resolve_dt(g, bad, p), ConfigError);
  }

  TEST_CASE("evolve divides the horizon evenly and records step zero") {
    const DensityField f0 = DensityField::uniform(Grid2D::unit_square(20));
    SolverConfig cfg;
    cfg.t_final = 0.1;
    cfg.snapshot_every = 50;
    const EvolutionTrace tr = evolve(f0, cfg, tanh_params());
    CHECK(tr.rows.front().step == 0);
    CHECK(tr.rows.back().t == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(static_cast<double>(tr.steps) * tr.dt == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(tr.snapshots.back().step == tr.steps);
    cfg.t_final = 0.0;
    const EvolutionTrace none = evolve(f0, cfg, tanh_params());
    CHECK(none.steps == 0);
    CHECK(test::l1(none.final_state, f0) == 0.0);
  }

  TEST_CASE("the joint reflection symmetry is preserved") {
    const Grid2D g = Grid2D::unit_square(32);
    const DensityField f0 = test::random_density(g, 21);
    SolverConfig cfg;
    cfg.t_final = 0.3;
    cfg.trace_every = 0;
    const DensityField a = evolve(f0, cfg, tanh_params()).final_state;
    const DensityField b = evolve(reflect(f0), cfg, tanh_params()).final_state;
    CHECK(test::l1(reflect(a), b) <= 1e-12);
  }

  TEST_CASE("results do not depend on the thread count") {
    const Grid2D g(0.0, 1.0, 41, 0.0, 1.0, 37);
    const DensityField f0 = test::random_density(g, 5);
    SolverConfig cfg;
    cfg.t_final = 0.05;
    const DensityField one = evolve(f0, cfg, tanh_params()).final_state;
    cfg.threads = 3;
    const DensityField three = evolve(f0, cfg, tanh_params()).final_state;
    for (std::size_t k = 0; k < one.values().size(); ++k) CHECK(one.values()[k] == three.values()[k]);
  }

  TEST_CASE("scalar and vector backends agree on a full run") {
    if (!simd::available(simd::Backend::kAvx2)) return;
    const Grid2D g = Grid2D::unit_square(30);
    const DensityField f0 = test::random_density(g, 8);
    SolverConfig cfg;
    cfg.t_final = 0.2;
    const simd::Backend before = simd::kernels().backend;
    simd::set_backend(simd::Backend::kScalar);
    const DensityField s = evolve(f0, cfg, tanh_params()).final_state;
    simd::set_backend(simd::Backend::kAvx2);
    const DensityField v = evolve(f0, cfg, tanh_params()).final_state;
    simd::set_backend(before);
    CHECK(test::l1(s, v) <= 1e-12);
  }

  TEST_CASE("uniform translation in R with constant velocity") {
    // Frozen measure concentrated so that a1 = const on the support: the
    // R operator with zero rho diffusion moves mass in +R.
    const Grid2D g(0.0, 1.0, 4, 0.0, 4.0, 40);
    DensityField mu(g);
    for (std::size_t j = 0; j < 40; ++j) mu(0, j) = 1.0;
    mu.normalize();
    DensityField f0(g);
    for (std::size_t i = 0; i < 4; ++i) f0(i, 5) = 1.0;
    f0.normalize();
    SolverConfig cfg;
    cfg.mode = SolverMode::kLinearFrozen;
    cfg.frozen = mu;
    cfg.t_final = 0.5;
    const KernelParams p{1.0, 1.0, 0.0, KernelKind::kTanh};
    const DensityField f = evolve(f0, cfg, p).final_state;
    CHECK(mass(f) == doctest::Approx(1.0).epsilon(1e-13));
    const auto [r0, R0] = center_of_mass(f0);
    const auto [r1, R1] = center_of_mass(f);
    (void)r0;
    (void)r1;
    // a = a1(rho) - a2(R) with a2 < 0 at R = 0.55 and a1 >= 0, so R moves up.
    CHECK(R1 > R0);
  }

  TEST_CASE("frozen mode checks its inputs") {
    SolverConfig cfg;
    cfg.mode = SolverMode::kLinearFrozen;
    CHECK_THROWS_AS(Stepper(Grid2D::unit_square(8), cfg, tanh_params()), ConfigError);
    cfg.frozen = DensityField::uniform(Grid2D::unit_square(9));
    CHECK_THROWS_AS(Stepper(Grid2D::unit_square(8), cfg, tanh_params()), ConfigError);
  }

  TEST_CASE("exponential fitting keeps a Gaussian rho profile stationary") {
    // Linear frozen kernel on a wide box: the OU Gaussian is the discrete
    // steady state up to truncation, so one long step changes little.
    const Grid2D g(-2.0, 2.0, 200, -0.1, 0.1, 2);
    const double var = 0.05;
    const DensityField f0 = DensityField::from_function(
        g, [&](double r, double) { return std::exp(-0.5 * r * r / var); });
    SolverConfig cfg;
    cfg.mode = SolverMode::kLinearFrozen;
    cfg.frozen = f0;
    cfg.t_final = 1.0;
    const KernelParams p{1.0, 1.0, std::sqrt(0.1), KernelKind::kLinear};
    const DensityField f = evolve(f0, cfg, p).final_state;
    const Marginals m0 = marginals(f0), m1 = marginals(f);
    double d = 0.0;
    for (std::size_t i = 0; i < 200; ++i) d += std::abs(m0.rho[i] - m1.rho[i]) * g.h_rho();
    CHECK(d < 2e-4);
  }
}
