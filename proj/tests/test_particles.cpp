#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "kinelo/error.hpp"
#include "kinelo/particles.hpp"

using namespace kinelo;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("particles") {
  TEST_CASE("counter RNG is deterministic and has the right moments") {
    CounterRng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    const std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
    CounterRng r(1, 1);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      su += u;
      const double z = r.normal();
      sn += z;
      sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(CounterRng::stream_id(1, 2, 3) != CounterRng::stream_id(1, 3, 2));
  }

  TEST_CASE("uniform population lies in its box and is reproducible") {
    const AgentPopulation p = AgentPopulation::uniform(500, -1.0, 2.0, 3.0, 4.0, 9);
    const AgentPopulation q = AgentPopulation::uniform(500, -1.0, 2.0, 3.0, 4.0, 9);
    CHECK(p.rho == q.rho);
    CHECK(p.R == q.R);
    for (std::size_t k = 0; k < 500; ++k) {
      CHECK(p.rho[k] >= -1.0);
      CHECK(p.rho[k] < 2.0);
      CHECK(p.R[k] >= 3.0);
      CHECK(p.R[k] < 4.0);
    }
    CHECK_THROWS_AS(AgentPopulation::uniform(3, 1.0, 1.0, 0.0, 1.0, 1), ConfigError);
  }

  TEST_CASE("each match is exactly zero-sum in R") {
    AgentPopulation pop = AgentPopulation::uniform(2, 0.0, 1.0, -3.0, 3.0, 2);
    const InteractionParams ip{0.7, 1.0, 0.3, 0.2, 0.1};
    const KernelParams kp;
    CounterRng rng(1, 1);
    for (int k = 0; k < 1000; ++k) {
      const MatchOutcome m = play_match(pop, 0, 1, ip, kp, rng);
      CHECK(m.dR_i + m.dR_j == 0.0);
      CHECK((m.score == 1 || m.score == -1));
    }
  }

  TEST_CASE("without noise and learning, strengths do not move") {
    AgentPopulation pop = AgentPopulation::uniform(101, 0.0, 1.0, 0.0, 1.0, 3);
    const std::vector<double> rho0 = pop.rho;
    const InteractionParams ip{1.0, 1.0, 0.0, 0.0, 0.05};
    pop = run_tournament(pop, 50, ip, KernelParams{});
    CHECK(pop.rho == rho0);
  }

  TEST_CASE("zero rounds is the identity, and the mean rating is invariant") {
    const AgentPopulation p0 = AgentPopulation::uniform(64, 0.0, 1.0, 0.0, 1.0, 4);
    const InteractionParams ip{1.0, 1.0, 0.5, 0.5, 0.05};
    const AgentPopulation same = run_tournament(p0, 0, ip, KernelParams{});
    CHECK(same.rho == p0.rho);
    CHECK(same.R == p0.R);
    const AgentPopulation p = run_tournament(p0, 200, ip, KernelParams{});
    CHECK(sum(p.R) == doctest::Approx(sum(p0.R)).epsilon(1e-12));
    CHECK(p.rng_state == 200);
  }

  TEST_CASE("odd populations leave one agent out per round") {
    const AgentPopulation p0 = AgentPopulation::uniform(5, 0.0, 1.0, 0.0, 1.0, 5);
    const InteractionParams ip{1.0, 1.0, 0.0, 0.0, 1.0};
    const AgentPopulation p = run_tournament(p0, 1, ip, KernelParams{});
    int unchanged = 0;
    for (std::size_t k = 0; k < 5; ++k) unchanged += p.R[k] == p0.R[k];
    CHECK(unchanged >= 1);
  }

  TEST_CASE("expected score matches tanh of the strength gap") {
    const KernelParams kp{1.0, 1.0, 0.1, KernelKind::kTanh};
    const int n = 100000;
    for (double dr : {-1.5, -0.3, 0.0, 0.4, 2.0}) {
      CounterRng rng(11, CounterRng::stream_id(99, static_cast<std::uint64_t>(dr * 1000 + 5000)));
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += sample_score(dr, kp, rng);
      const double mean = s / n;
      const double se = std::sqrt((1.0 - std::tanh(dr) * std::tanh(dr)) / n);
      CHECK(std::abs(mean - std::tanh(dr)) <= 3.0 * std::max(se, 1.0 / n));
    }
  }

  TEST_CASE("tournament results do not depend on the thread count") {
    const AgentPopulation p0 = AgentPopulation::uniform(300, 0.0, 1.0, 0.0, 1.0, 6);
    const InteractionParams ip{1.0, 1.0, 0.5, 0.5, 0.01};
    const AgentPopulation a = run_tournament(p0, 20, ip, KernelParams{}, 1);
    const AgentPopulation b = run_tournament(p0, 20, ip, KernelParams{}, 4);
    CHECK(a.rho == b.rho);
    CHECK(a.R == b.R);
  }

  TEST_CASE("learning pulls strengths upward on average") {
    // h1 >= 0, so with alpha > 0 and no noise every strength increases.
    const AgentPopulation p0 = AgentPopulation::uniform(50, 0.0, 1.0, 0.0, 1.0, 8);
    const InteractionParams ip{1.0, 1.0, 0.0, 1.0, 0.01};
    const AgentPopulation p = run_tournament(p0, 10, ip, KernelParams{});
    for (std::size_t k = 0; k < 50; ++k) CHECK(p.rho[k] >= p0.rho[k]);
  }

  TEST_CASE("interaction parameters are validated") {
    InteractionParams ip;
    ip.epsilon = 0.0;
    CHECK_THROWS_AS(ip.validate(), ConfigError);
    ip = {};
    ip.K0 = -1.0;
    CHECK_THROWS_AS(ip.validate(), ConfigError);
    CHECK(InteractionParams{1.0, 1.0, 2.0, 0.0, 0.25}.sigma_micro() == doctest::Approx(1.0));
  }

  TEST_CASE("tabulated empirical coefficients match exact sums") {
    const auto pts = test::random_vector(3000, 1, -2.0, 2.0);
    const auto at = test::random_vector(400, 2, -2.0, 2.0);
    const KernelParams kp{1.3, 1.0, 0.1, KernelKind::kTanh};
    const auto exact = empirical_coefficient(pts, at, kp, 1u << 20);
    const auto table = empirical_coefficient(pts, at, kp, 1024, 1024);
    for (std::size_t k = 0; k < at.size(); ++k) CHECK(std::abs(exact[k] - table[k]) < 1e-5);
    const KernelParams lin{2.0, 1.0, 0.1, KernelKind::kLinear};
    const auto l = empirical_coefficient(pts, at, lin);
    CHECK(l[3] == doctest::Approx(2.0 * (at[3] - sum(pts) / 3000.0)));
  }

  TEST_CASE("a single SDE particle feels no drift") {
    // b(0) = 0, so a lone particle only diffuses in rho and stays put in R.
    AgentPopulation pop;
    pop.rho = {0.3};
    pop.R = {0.7};
    pop.rng_seed = 1;
    const KernelParams kp{1.0, 1.0, 0.0, KernelKind::kTanh};
    pop = run_mean_field_sde(pop, 1.0, 0.01, kp);
    CHECK(pop.rho[0] == 0.3);
    CHECK(pop.R[0] == 0.7);
  }

  TEST_CASE("two deterministic SDE particles contract in rho") {
    AgentPopulation pop;
    pop.rho = {-1.0, 1.0};
    pop.R = {0.0, 0.0};
    pop.rng_seed = 1;
    const KernelParams kp{1.0, 1.0, 0.0, KernelKind::kTanh};
    const AgentPopulation p = run_mean_field_sde(pop, 1.0, 1e-3, kp);
    CHECK(std::abs(p.rho[0] + p.rho[1]) <= 1e-12);
    CHECK(p.rho[1] < 1.0);
    CHECK(p.rho[1] > 0.0);
    // The stronger player gains rating.
    CHECK(p.R[1] > 0.0);
    CHECK(p.R[0] == doctest::Approx(-p.R[1]).epsilon(1e-12));
  }

  TEST_CASE("SDE is reproducible and thread independent") {
    const AgentPopulation p0 = AgentPopulation::uniform(700, 0.0, 1.0, 0.0, 1.0, 12);
    const KernelParams kp{1.0, 1.0, std::sqrt(0.1), KernelKind::kTanh};
    const AgentPopulation a = run_mean_field_sde(p0, 0.05, 0.01, kp, 1);
    const AgentPopulation b = run_mean_field_sde(p0, 0.05, 0.01, kp, 3);
    CHECK(a.rho == b.rho);
    CHECK(a.R == b.R);
    CHECK_THROWS_AS(run_mean_field_sde(p0, 0.05, 0.0, kp), ConfigError);
  }

  TEST_CASE("histogram has the in-box mass and warns past five percent") {
    AgentPopulation pop = AgentPopulation::uniform(1000, 0.0, 1.0, 0.0, 1.0, 13);
    const HistogramResult h = histogram_density(pop, Grid2D::unit_square(10));
    CHECK(h.in_box_fraction == 1.0);
    CHECK(mass(h.density) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.warning.empty());
    for (std::size_t k = 0; k < 100; ++k) pop.rho[k] = 5.0;
    const HistogramResult h2 = histogram_density(pop, Grid2D::unit_square(10));
    CHECK(h2.out_of_box == 100);
    CHECK(mass(h2.density) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK_FALSE(h2.warning.empty());
  }
}
