#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kinelo/grid.hpp"
#include "kinelo/particles.hpp"

namespace kinelo::test {

/// Positive random density with unit mass, reproducible from seed.
inline DensityField random_density(const Grid2D& g, std::uint64_t seed, double floor = 0.05) {
  CounterRng rng(seed, 7);
  DensityField f(g);
  for (double& v : f.values()) v = floor + rng.uniform();
  f.normalize();
  return f;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  CounterRng rng(seed, 11);
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

inline double l1(const DensityField& a, const DensityField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s += std::abs(a.values()[k] - b.values()[k]);
  return s * a.grid().cell_area();
}

}  // namespace kinelo::test
