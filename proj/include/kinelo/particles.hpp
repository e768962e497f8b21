#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kinelo/grid.hpp"
#include "kinelo/kernels.hpp"

namespace kinelo {

/// Counter-based generator: the k-th draw of stream s under seed is a pure
/// function of (seed, s, k), so work split across threads sees the same
/// numbers regardless of scheduling. Mixing is SplitMix64's finalizer.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal (Box-Muller, second value cached).
  double normal();

  static std::uint64_t mix(std::uint64_t x) noexcept;
  /// Stream id for a (domain, a, b) triple.
  static std::uint64_t stream_id(std::uint64_t domain, std::uint64_t a, std::uint64_t b = 0) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct AgentPopulation {
  std::vector<double> rho;
  std::vector<double> R;
  std::uint64_t rng_seed = 0;
  /// Rounds or SDE steps consumed so far; part of every stream id.
  std::uint64_t rng_state = 0;

  std::size_t size() const noexcept { return rho.size(); }

  /// n agents uniform on [rho_lo, rho_hi) x [R_lo, R_hi).
  static AgentPopulation uniform(std::size_t n, double rho_lo, double rho_hi, double R_lo,
                                 double R_hi, std::uint64_t seed);
  /// Throws ConfigError on length mismatch or non-finite entries.
  void validate() const;
};

/// Micro-scale parameters. The quasi-invariant scaling uses K = eps K0,
/// alpha = eps alpha0, sigma_micro^2 = eps sigma0^2, and one round per
/// eps units of macroscopic time.
struct InteractionParams {
  double K0 = 1.0;
  double gamma_micro = 1.0;
  double sigma0 = 0.0;
  double alpha0 = 0.0;
  double epsilon = 1.0;

  double K() const noexcept { return epsilon * K0; }
  double alpha() const noexcept { return epsilon * alpha0; }
  double sigma_micro() const noexcept;
  void validate() const;
};

struct MatchOutcome {
  int score = 0;  // S_ij in {-1, +1}
  double dR_i = 0.0;
  double dR_j = 0.0;  // exactly -dR_i
  double drho_i = 0.0;
  double drho_j = 0.0;
};

/// S in {-1, +1} with P(S = +1) = (1 + b(delta_rho)) / 2.
int sample_score(double delta_rho, const KernelParams& params, CounterRng& rng);

/// One binary game between agents i and j (i != j), applied in place.
///   R_i += K (S - b(R_i - R_j)),   R_j += K (-S - b(R_j - R_i))
///   rho_i += gamma alpha h1(rho_j - rho_i) + eta_i, and symmetrically for j.
MatchOutcome play_match(AgentPopulation& pop, std::size_t i, std::size_t j,
                        const InteractionParams& p, const KernelParams& params, CounterRng& rng);

/// `rounds` rounds of uniform random perfect matching. With odd n one agent
/// sits out each round.
AgentPopulation run_tournament(AgentPopulation pop, std::size_t rounds,
                               const InteractionParams& p, const KernelParams& params,
                               std::size_t threads = 1);

/// Evaluates a1 or a2 of the empirical measure of `points` at `at`.
/// Exact O(n m) sums up to `exact_limit` particles, otherwise linear
/// interpolation from a table on `table_nodes` nodes spanning the samples.
std::vector<double> empirical_coefficient(const std::vector<double>& points,
                                          const std::vector<double>& at,
                                          const KernelParams& params,
                                          std::size_t exact_limit = 1024,
                                          std::size_t table_nodes = 1024,
                                          std::size_t threads = 1);

/// Euler-Maruyama step of the mean-field system driven by the empirical
/// measure:
///   R_i   += (a1(rho_i) - a2(R_i)) dt
///   rho_i += -gamma a1(rho_i) dt + sigma sqrt(dt) N(0, 1)
AgentPopulation step_mean_field_sde(AgentPopulation pop, double dt, const KernelParams& params,
                                    std::size_t threads = 1);

/// Repeated SDE steps with a uniform step dividing t_final.
AgentPopulation run_mean_field_sde(AgentPopulation pop, double t_final, double dt_max,
                                   const KernelParams& params, std::size_t threads = 1);

struct HistogramResult {
  DensityField density;  // mass equals in_box_fraction
  double in_box_fraction = 0.0;
  std::size_t out_of_box = 0;
  std::string warning;  // non-empty when more than 5% fall outside
};

HistogramResult histogram_density(const AgentPopulation& pop, const Grid2D& grid);

}  // namespace kinelo
