#include "kinelo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinelo/error.hpp"

namespace kinelo {

Grid2D::Grid2D(double rho_min, double rho_max, std::size_t n_rho, double R_min,
               double R_max, std::size_t n_R)
    : rho_min_(rho_min),
      rho_max_(rho_max),
      R_min_(R_min),
      R_max_(R_max),
      n_rho_(n_rho),
      n_R_(n_R) {
  if (!(rho_max > rho_min)) throw ConfigError("grid.rho_max", "must exceed grid.rho_min");
  if (!(R_max > R_min)) throw ConfigError("grid.R_max", "must exceed grid.R_min");
  if (n_rho == 0) throw ConfigError("grid.n_rho", "must be positive");
  if (n_R == 0) throw ConfigError("grid.n_R", "must be positive");
  h_rho_ = (rho_max - rho_min) / static_cast<double>(n_rho);
  h_R_ = (R_max - R_min) / static_cast<double>(n_R);
}

DensityField::DensityField(Grid2D grid, double fill)
    : grid_(grid), values_(grid.cells(), fill) {}

DensityField::DensityField(Grid2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cells()) {
    throw ConfigError("density", "value count " + std::to_string(values_.size()) +
                                     " does not match grid (" +
                                     std::to_string(grid_.cells()) + " cells)");
  }
}

DensityField DensityField::uniform(const Grid2D& grid) {
  const double area = (grid.rho_max() - grid.rho_min()) * (grid.R_max() - grid.R_min());
  return DensityField(grid, 1.0 / area);
}

DensityField DensityField::from_function(const Grid2D& grid,
                                         const std::function<double(double, double)>& g) {
  DensityField f(grid);
  for (std::size_t i = 0; i < grid.n_rho(); ++i) {
    for (std::size_t j = 0; j < grid.n_R(); ++j) {
      f(i, j) = g(grid.rho_center(i), grid.R_center(j));
    }
  }
  f.normalize();
  return f;
}

double DensityField::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double DensityField::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

void DensityField::normalize(double target) {
  const double m = mass(*this);
  if (!(m > 0.0)) throw ConfigError("density", "cannot normalize a field with zero mass");
  *this *= target / m;
}

DensityField& DensityField::operator+=(const DensityField& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

DensityField& DensityField::operator-=(const DensityField& other) {
  require_same_grid(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

DensityField& DensityField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

DensityField DensityField::shifted(long di, long dj) const {
  DensityField out(grid_);
  const long nr = static_cast<long>(grid_.n_rho());
  const long nR = static_cast<long>(grid_.n_R());
  for (long i = 0; i < nr; ++i) {
    const long si = i - di;
    if (si < 0 || si >= nr) continue;
    for (long j = 0; j < nR; ++j) {
      const long sj = j - dj;
      if (sj < 0 || sj >= nR) continue;
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          (*this)(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
    }
  }
  return out;
}

DensityField operator-(DensityField a, const DensityField& b) { return a -= b; }
DensityField operator+(DensityField a, const DensityField& b) { return a += b; }
DensityField operator*(double s, DensityField a) { return a *= s; }

double mass(const DensityField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_area();
}

std::pair<double, double> center_of_mass(const DensityField& f) {
  const Grid2D& g = f.grid();
  double m = 0.0, mr = 0.0, mR = 0.0;
  for (std::size_t i = 0; i < g.n_rho(); ++i) {
    double row = 0.0, rowR = 0.0;
    for (std::size_t j = 0; j < g.n_R(); ++j) {
      row += f(i, j);
      rowR += f(i, j) * g.R_center(j);
    }
    m += row;
    mr += row * g.rho_center(i);
    mR += rowR;
  }
  if (!(m > 0.0)) throw ConfigError("density", "center of mass of a zero-mass field");
  return {mr / m, mR / m};
}

double weighted_integral(const DensityField& f,
                         const std::function<double(double, double)>& w) {
  const Grid2D& g = f.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.n_rho(); ++i) {
    const double rho = g.rho_center(i);
    for (std::size_t j = 0; j < g.n_R(); ++j) s += w(rho, g.R_center(j)) * f(i, j);
  }
  return s * g.cell_area();
}

Marginals marginals(const DensityField& f) {
  const Grid2D& g = f.grid();
  Marginals m{std::vector<double>(g.n_rho(), 0.0), std::vector<double>(g.n_R(), 0.0)};
  for (std::size_t i = 0; i < g.n_rho(); ++i) {
    const auto row = f.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < g.n_R(); ++j) {
      s += row[j];
      m.R[j] += row[j];
    }
    m.rho[i] = s * g.h_R();
  }
  for (double& v : m.R) v *= g.h_rho();
  return m;
}

void require_same_grid(const DensityField& a, const DensityField& b) {
  if (!(a.grid() == b.grid())) throw ConfigError("grid", "density fields live on different grids");
}

}  // namespace kinelo
