#include "kinelo/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinelo/error.hpp"
#include "kinelo/simd.hpp"
#include "parallel.hpp"

namespace kinelo {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

enum StreamDomain : std::uint64_t {
  kInitDomain = 1,
  kShuffleDomain = 2,
  kMatchDomain = 3,
  kSdeDomain = 4,
};

}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::stream_id(std::uint64_t domain, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return mix(mix(mix(domain * kGolden) ^ (a + kGolden)) ^ (b + 2 * kGolden));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(mix(seed + kGolden) ^ stream)) {}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(th);
  has_cached_ = true;
  return r * std::cos(th);
}

AgentPopulation AgentPopulation::uniform(std::size_t n, double rho_lo, double rho_hi,
                                         double R_lo, double R_hi, std::uint64_t seed) {
  if (!(rho_hi > rho_lo) || !(R_hi > R_lo)) throw ConfigError("particles.init", "empty sampling box");
  AgentPopulation pop;
  pop.rng_seed = seed;
  pop.rho.resize(n);
  pop.R.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    CounterRng rng(seed, CounterRng::stream_id(kInitDomain, k));
    pop.rho[k] = rho_lo + (rho_hi - rho_lo) * rng.uniform();
    pop.R[k] = R_lo + (R_hi - R_lo) * rng.uniform();
  }
  return pop;
}

void AgentPopulation::validate() const {
  if (rho.size() != R.size()) throw ConfigError("particles", "rho and R have different lengths");
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (!std::isfinite(rho[k]) || !std::isfinite(R[k])) {
      throw ConfigError("particles", "non-finite agent state at index " + std::to_string(k));
    }
  }
}

double InteractionParams::sigma_micro() const noexcept { return std::sqrt(epsilon) * sigma0; }

void InteractionParams::validate() const {
  if (!(K0 > 0.0)) throw ConfigError("particles.K0", "must be > 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("particles.epsilon", "must lie in (0, 1]");
  if (!(sigma0 >= 0.0)) throw ConfigError("particles.sigma0", "must be >= 0");
  if (!(alpha0 >= 0.0)) throw ConfigError("particles.alpha0", "must be >= 0");
  if (!(gamma_micro >= 0.0)) throw ConfigError("particles.gamma_micro", "must be >= 0");
}

int sample_score(double delta_rho, const KernelParams& params, CounterRng& rng) {
  const double p_win = 0.5 * (1.0 + b_eval(delta_rho, params));
  return rng.uniform() < p_win ? 1 : -1;
}

MatchOutcome play_match(AgentPopulation& pop, std::size_t i, std::size_t j,
                        const InteractionParams& p, const KernelParams& params,
                        CounterRng& rng) {
  MatchOutcome m;
  m.score = sample_score(pop.rho[i] - pop.rho[j], params, rng);
  const double bij = b_eval(pop.R[i] - pop.R[j], params);
  // b is odd, so b(R_j - R_i) = -bij and the two increments cancel exactly.
  m.dR_i = p.K() * (static_cast<double>(m.score) - bij);
  m.dR_j = -m.dR_i;
  const double learn = p.gamma_micro * p.alpha();
  const double sig = p.sigma_micro();
  const double eta_i = sig > 0.0 ? sig * rng.normal() : 0.0;
  const double eta_j = sig > 0.0 ? sig * rng.normal() : 0.0;
  m.drho_i = learn * h1_eval(pop.rho[j] - pop.rho[i], params) + eta_i;
  m.drho_j = learn * h1_eval(pop.rho[i] - pop.rho[j], params) + eta_j;
  pop.R[i] += m.dR_i;
  pop.R[j] += m.dR_j;
  pop.rho[i] += m.drho_i;
  pop.rho[j] += m.drho_j;
  return m;
}

AgentPopulation run_tournament(AgentPopulation pop, std::size_t rounds,
                               const InteractionParams& p, const KernelParams& params,
                               std::size_t threads) {
  p.validate();
  params.validate(true);
  pop.validate();
  const std::size_t n = pop.size();
  if (n < 2) {
    pop.rng_state += rounds;
    return pop;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::uint64_t round = pop.rng_state++;
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    CounterRng shuffle(pop.rng_seed, CounterRng::stream_id(kShuffleDomain, round));
    // Fisher-Yates with the counter stream.
    for (std::size_t k = n - 1; k > 0; --k) {
      const auto pick = static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(k + 1));
      std::swap(order[k], order[std::min(pick, k)]);
    }
    const std::size_t pairs = n / 2;
    detail::parallel_for(pairs, threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q) {
        CounterRng rng(pop.rng_seed, CounterRng::stream_id(kMatchDomain, round, q));
        play_match(pop, order[2 * q], order[2 * q + 1], p, params, rng);
      }
    });
  }
  return pop;
}

std::vector<double> empirical_coefficient(const std::vector<double>& points,
                                          const std::vector<double>& at,
                                          const KernelParams& params, std::size_t exact_limit,
                                          std::size_t table_nodes, std::size_t threads) {
  const std::size_t n = points.size();
  std::vector<double> out(at.size(), 0.0);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);

  if (params.kind == KernelKind::kLinear) {
    double mean = 0.0;
    for (double v : points) mean += v;
    mean *= inv_n;
    for (std::size_t k = 0; k < at.size(); ++k) out[k] = params.c * (at[k] - mean);
    return out;
  }

  const auto& kern = simd::kernels();
  if (n <= exact_limit || table_nodes < 2) {
    detail::parallel_for(at.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        out[k] = kern.tanh_sum(at[k], points.data(), n, params.c) * inv_n;
      }
    });
    return out;
  }

  const auto [plo, phi] = std::minmax_element(at.begin(), at.end());
  const double lo = *plo, hi = *phi;
  if (hi == lo) {
    const double v = kern.tanh_sum(lo, points.data(), n, params.c) * inv_n;
    std::fill(out.begin(), out.end(), v);
    return out;
  }
  const double h = (hi - lo) / static_cast<double>(table_nodes - 1);
  std::vector<double> table(table_nodes);
  detail::parallel_for(table_nodes, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      table[k] = kern.tanh_sum(lo + static_cast<double>(k) * h, points.data(), n, params.c) * inv_n;
    }
  });
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double s = (at[k] - lo) / h;
    const auto idx = std::min(static_cast<std::size_t>(s), table_nodes - 2);
    const double t = s - static_cast<double>(idx);
    out[k] = (1.0 - t) * table[idx] + t * table[idx + 1];
  }
  return out;
}

AgentPopulation step_mean_field_sde(AgentPopulation pop, double dt, const KernelParams& params,
                                    std::size_t threads) {
  if (!(dt > 0.0)) throw ConfigError("sde.dt", "must be > 0");
  params.validate(true);
  const std::uint64_t step = pop.rng_state++;
  const std::vector<double> a1 = empirical_coefficient(pop.rho, pop.rho, params, 1024, 1024, threads);
  const std::vector<double> a2 = empirical_coefficient(pop.R, pop.R, params, 1024, 1024, threads);
  const double noise = params.sigma * std::sqrt(dt);
  const std::size_t n = pop.size();
  // Blocks of 256 agents share one stream so the draw layout is fixed.
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  detail::parallel_for(blocks, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t blk = b; blk < e; ++blk) {
      CounterRng rng(pop.rng_seed, CounterRng::stream_id(kSdeDomain, step, blk));
      const std::size_t end = std::min(n, (blk + 1) * kBlock);
      for (std::size_t k = blk * kBlock; k < end; ++k) {
        pop.R[k] += (a1[k] - a2[k]) * dt;
        pop.rho[k] += -params.gamma * a1[k] * dt + (noise > 0.0 ? noise * rng.normal() : 0.0);
      }
    }
  });
  return pop;
}

AgentPopulation run_mean_field_sde(AgentPopulation pop, double t_final, double dt_max,
                                   const KernelParams& params, std::size_t threads) {
  if (!(t_final >= 0.0)) throw ConfigError("sde.t_final", "must be >= 0");
  if (!(dt_max > 0.0)) throw ConfigError("sde.dt", "must be > 0");
  if (t_final == 0.0) return pop;
  const auto steps = static_cast<std::size_t>(std::ceil(t_final / dt_max - 1e-9));
  const double dt = t_final / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) pop = step_mean_field_sde(std::move(pop), dt, params, threads);
  return pop;
}

HistogramResult histogram_density(const AgentPopulation& pop, const Grid2D& grid) {
  pop.validate();
  HistogramResult h;
  h.density = DensityField(grid);
  const std::size_t n = pop.size();
  if (n == 0) throw ConfigError("particles", "histogram of an empty population");
  const double w = 1.0 / (static_cast<double>(n) * grid.cell_area());
  for (std::size_t k = 0; k < n; ++k) {
    if (!grid.contains(pop.rho[k], pop.R[k])) {
      ++h.out_of_box;
      continue;
    }
    const auto i = std::min(grid.n_rho() - 1,
                            static_cast<std::size_t>((pop.rho[k] - grid.rho_min()) / grid.h_rho()));
    const auto j = std::min(grid.n_R() - 1,
                            static_cast<std::size_t>((pop.R[k] - grid.R_min()) / grid.h_R()));
    h.density(i, j) += w;
  }
  h.in_box_fraction = static_cast<double>(n - h.out_of_box) / static_cast<double>(n);
  if (1.0 - h.in_box_fraction > 0.05) {
    std::ostringstream os;
    os << h.out_of_box << " of " << n << " agents (" << 100.0 * (1.0 - h.in_box_fraction)
       << "%) lie outside the grid box";
    h.warning = os.str();
  }
  return h;
}

}  // namespace kinelo
