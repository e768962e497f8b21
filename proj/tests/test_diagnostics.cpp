#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kinelo/diagnostics.hpp"
#include "kinelo/error.hpp"
#include "kinelo/experiments.hpp"

using namespace kinelo;

namespace {

KernelParams tanh_params(double diffusivity = 0.05) {
  return {1.0, 1.0, std::sqrt(2.0 * diffusivity), KernelKind::kTanh};
}

// L* phi / phi by central differences of phi.
double ratio_fd(double r, double R, double a1, double a2, const LyapunovWeight& w,
                const KernelParams& p) {
  const double h = 1e-4;
  auto phi = [&](double x, double y) { return phi_beta(x, y, w); };
  const double dR = (phi(r, R + h) - phi(r, R - h)) / (2 * h);
  const double dr = (phi(r + h, R) - phi(r - h, R)) / (2 * h);
  const double drr = (phi(r + h, R) - 2 * phi(r, R) + phi(r - h, R)) / (h * h);
  const double D = 0.5 * p.sigma * p.sigma;
  return ((a1 - a2) * dR - p.gamma * a1 * dr + D * drr) / phi(r, R);
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("beta = 0 energy is the L1 distance") {
    const Grid2D g(0.0, 1.0, 12, -1.0, 1.0, 9);
    const DensityField f = test::random_density(g, 1), h = test::random_density(g, 2);
    CHECK(relative_energy(f, h, EnergyWeight::phi(0.0, 1.0)).value ==
          doctest::Approx(test::l1(f, h)).epsilon(1e-13));
    CHECK(beta_norm(f - h, 0.0, 1.0) == doctest::Approx(test::l1(f, h)).epsilon(1e-13));
  }

  TEST_CASE("property: beta distance is a metric that dominates L1") {
    const Grid2D g = Grid2D::centered_box(3.0, 25);
    const BetaNorm norm(g, 0.3, 1.5);
    for (std::uint64_t s = 0; s < 8; ++s) {
      const DensityField a = test::random_density(g, 3 * s + 1), b = test::random_density(g, 3 * s + 2),
                         c = test::random_density(g, 3 * s + 3);
      CHECK(norm.distance(a, a) == 0.0);
      CHECK(norm.distance(a, b) == doctest::Approx(norm.distance(b, a)).epsilon(1e-14));
      CHECK(norm.distance(a, c) <= norm.distance(a, b) + norm.distance(b, c) + 1e-14);
      CHECK(norm.distance(a, b) >= test::l1(a, b));
      CHECK(norm.distance(a, b) == doctest::Approx(beta_norm(a - b, 0.3, 1.5)).epsilon(1e-13));
    }
  }

  TEST_CASE("inverse steady-state weight skips cells below the floor") {
    const Grid2D g = Grid2D::unit_square(4);
    DensityField ref = DensityField::uniform(g);
    ref(0, 0) = 0.0;
    const DensityField f = DensityField::uniform(g);
    const RelativeEnergy e = relative_energy(f, ref, EnergyWeight::inverse_steady_state());
    CHECK(e.excluded_cells == 1);
    CHECK(e.excluded_mass == doctest::Approx(f(0, 0) * g.cell_area()));
    CHECK(e.value == doctest::Approx(0.0));
  }

  TEST_CASE("generator ratio matches finite differences of phi") {
    const KernelParams p{1.0, 1.7, 0.6, KernelKind::kTanh};
    const LyapunovWeight w{0.2, 1.7};
    for (double r : {-3.0, -0.4, 0.0, 1.2, 5.0}) {
      for (double R : {-2.0, 0.3, 4.0}) {
        for (auto [a1, a2] : {std::pair{0.3, -0.5}, std::pair{-0.9, 0.8}, std::pair{0.0, 0.0}}) {
          CHECK(generator_ratio(r, R, a1, a2, w, p) ==
                doctest::Approx(ratio_fd(r, R, a1, a2, w, p)).epsilon(1e-5).scale(1e-6));
        }
      }
    }
  }

  TEST_CASE("confinement radii worked example") {
    // alpha = 2, beta = 0.1, gamma = 1, M = 100, C' = 2:
    // delta = 0.4 sqrt 3 / (2 + 0.1 sqrt 3), z1 = log 800 / delta.
    const ConfinementRadii r = confinement_radii(100.0, 0.1, 1.0, AssumptionConstants::for_tanh(1.0), 2.0);
    CHECK(r.delta == doctest::Approx(0.318801170290958).epsilon(1e-12));
    CHECK(r.delta_prime_statement == doctest::Approx(0.318801170290958).epsilon(1e-12));
    CHECK(r.delta_prime_proof == doctest::Approx(0.332032722869155).epsilon(1e-12));
    CHECK(r.delta_prime == r.delta_prime_statement);
    CHECK(r.z1 == doctest::Approx(20.967964833903).epsilon(1e-10));
    CHECK(r.z2 == doctest::Approx(20.967964833903).epsilon(1e-10));
    CHECK_THROWS_AS(confinement_radii(0.1, 0.1, 1.0, AssumptionConstants::for_tanh(1.0), 2.0), ConfigError);
  }

  TEST_CASE("coefficients exceed one half in modulus beyond the radii") {
    const Grid2D g = Grid2D::centered_box(4.0, 80);
    const LyapunovWeight w{0.1, 1.0};
    const KernelParams p = tanh_params();
    for (double s : {0.0, 1.0, 2.5}) {
      const DensityField mu = DensityField::from_function(g, [s](double r, double R) {
        return std::exp(-((r - s) * (r - s) + (R + s) * (R + s)));
      });
      const double M = weighted_integral(mu, w);
      const ConfinementRadii z = confinement_radii(M, w.beta, w.gamma, AssumptionConstants::for_tanh(p.c));
      for (double x : {z.z1, z.z1 + 1.0, 2.0 * z.z1}) {
        CHECK(std::abs(a1_of_density(mu, x, p)) > 0.5);
        CHECK(std::abs(a1_of_density(mu, -x, p)) > 0.5);
      }
      for (double x : {z.z2, 2.0 * z.z2}) {
        CHECK(std::abs(a2_of_density(mu, x, p)) > 0.5);
        CHECK(std::abs(a2_of_density(mu, -x, p)) > 0.5);
      }
    }
  }

  TEST_CASE("W1 of a translated density is the translation") {
    const Grid2D g(0.0, 4.0, 80, 0.0, 2.0, 20);
    const DensityField f = DensityField::from_function(
        g, [](double r, double R) { return r > 0.5 && r < 1.5 ? 1.0 + R : 0.0; });
    const DensityField s = f.shifted(6, 0);
    CHECK(wasserstein1_marginal(f, s, Axis::kRho) == doctest::Approx(6 * g.h_rho()).epsilon(1e-12));
    CHECK(wasserstein1_marginal(f, s, Axis::kR) == doctest::Approx(0.0).scale(1e-14));
    CHECK(wasserstein1_marginal(f, f, Axis::kRho) == 0.0);
  }

  TEST_CASE("W1 between a point mass sample and a uniform marginal") {
    const DensityField f = DensityField::uniform(Grid2D::unit_square(50));
    for (double x0 : {0.0, 0.3, 0.5, 1.0, 2.0}) {
      const std::vector<double> s(17, x0);
      double exact = 0.5 * x0 * x0 + 0.5 * (1.0 - x0) * (1.0 - x0);
      if (x0 > 1.0) exact = x0 - 0.5;
      CHECK(wasserstein1_samples(s, f, Axis::kRho) == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK_THROWS_AS(wasserstein1_samples(std::vector<double>{}, f, Axis::kR), ConfigError);
  }

  TEST_CASE("coefficient gap is bounded by the L1 distance") {
    const Grid2D g = Grid2D::centered_box(2.0, 30);
    const KernelParams p = tanh_params();
    for (std::uint64_t s = 1; s <= 4; ++s) {
      const DensityField a = test::random_density(g, s), b = test::random_density(g, s + 10);
      const CoefficientGap gap = coefficient_gap(a, b, p);
      CHECK(gap.a1 <= test::l1(a, b) + 1e-14);
      CHECK(gap.a2 <= test::l1(a, b) + 1e-14);
    }
    const DensityField a = test::random_density(g, 1);
    CHECK(coefficient_gap(a, a, p).total() == 0.0);
  }

  TEST_CASE("drift check succeeds for a compactly supported measure") {
    const DensityField mu = DensityField::uniform(Grid2D::unit_square(40));
    const LyapunovWeight w{0.1, 1.0};
    const DriftCheckResult r = lyapunov_drift_check(mu, w, tanh_params(), 8.0, Grid2D::centered_box(24.0, 240));
    CHECK(r.success());
    CHECK(r.lambda_hat > 0.0);
    CHECK(r.A_hat >= 0.0);
    CHECK(r.B_hat <= r.exterior_ball);
    CHECK(r.exterior_cells > 0);
    CHECK(r.cells == 240 * 240);
  }

  TEST_CASE("semigroup continuity: identical measures give zero distance") {
    const Grid2D g = Grid2D::unit_square(20);
    const DensityField mu = test::random_density(g, 3), nu = DensityField::uniform(g);
    const ContinuityProbe same = semigroup_continuity_probe(mu, mu, nu, 0.05, tanh_params());
    CHECK(same.distance() == 0.0);
    CHECK(same.ratio() == 0.0);
    const ContinuityProbe diff =
        semigroup_continuity_probe(mu, test::random_density(g, 4), nu, 0.05, tanh_params());
    CHECK(diff.distance() > 0.0);
    CHECK(diff.gap.total() > 0.0);
  }

  TEST_CASE("mode analysis counts plateau-merged maxima") {
    const Grid2D g = Grid2D::unit_square(20);
    const DensityField one = DensityField::from_function(
        g, [](double r, double R) { return std::exp(-20 * ((r - 0.5) * (r - 0.5) + (R - 0.4) * (R - 0.4))); });
    CHECK(analyze_modes(one).unimodal());
    const DensityField two = DensityField::from_function(g, [](double r, double R) {
      return std::exp(-80 * ((r - 0.25) * (r - 0.25) + (R - 0.5) * (R - 0.5))) +
             std::exp(-80 * ((r - 0.75) * (r - 0.75) + (R - 0.5) * (R - 0.5)));
    });
    CHECK(analyze_modes(two).local_maxima == 2);
    const DensityField edge = DensityField::from_function(g, [](double r, double) { return r; });
    CHECK_FALSE(analyze_modes(edge).interior);
    CHECK(analyze_modes(DensityField::uniform(g)).local_maxima == 1);
  }

  TEST_CASE("nonincreasing tail tolerates only the slack") {
    CHECK(nonincreasing_tail({5, 4, 3, 2, 1, 1, 0.5, 0.4}));
    CHECK_FALSE(nonincreasing_tail({5, 4, 3, 2, 1, 1, 0.5, 0.6}));
    CHECK(nonincreasing_tail({5, 4, 3, 2, 1, 1, 0.5, 0.5 + 1e-11}));
  }
}
