#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace kinelo {

/// Cell-centred rectangular mesh over [rho_min, rho_max] x [R_min, R_max].
/// Cell (i, j) has centre (rho_min + (i + 1/2) h_rho, R_min + (j + 1/2) h_R).
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(double rho_min, double rho_max, std::size_t n_rho, double R_min,
         double R_max, std::size_t n_R);

  /// Unit square with n x n cells.
  static Grid2D unit_square(std::size_t n) { return {0.0, 1.0, n, 0.0, 1.0, n}; }
  /// Centred box [-L, L]^2 with n x n cells.
  static Grid2D centered_box(double half_width, std::size_t n) {
    return {-half_width, half_width, n, -half_width, half_width, n};
  }

  double rho_min() const noexcept { return rho_min_; }
  double rho_max() const noexcept { return rho_max_; }
  double R_min() const noexcept { return R_min_; }
  double R_max() const noexcept { return R_max_; }
  std::size_t n_rho() const noexcept { return n_rho_; }
  std::size_t n_R() const noexcept { return n_R_; }
  std::size_t cells() const noexcept { return n_rho_ * n_R_; }
  double h_rho() const noexcept { return h_rho_; }
  double h_R() const noexcept { return h_R_; }
  double cell_area() const noexcept { return h_rho_ * h_R_; }

  double rho_center(std::size_t i) const noexcept {
    return rho_min_ + (static_cast<double>(i) + 0.5) * h_rho_;
  }
  double R_center(std::size_t j) const noexcept {
    return R_min_ + (static_cast<double>(j) + 0.5) * h_R_;
  }
  double rho_face(std::size_t i) const noexcept {
    return rho_min_ + static_cast<double>(i) * h_rho_;
  }
  double R_face(std::size_t j) const noexcept {
    return R_min_ + static_cast<double>(j) * h_R_;
  }

  bool contains(double rho, double R) const noexcept {
    return rho >= rho_min_ && rho < rho_max_ && R >= R_min_ && R < R_max_;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  double rho_min_ = 0.0, rho_max_ = 1.0;
  double R_min_ = 0.0, R_max_ = 1.0;
  std::size_t n_rho_ = 1, n_R_ = 1;
  double h_rho_ = 1.0, h_R_ = 1.0;
};

/// Cell averages on a Grid2D, row-major with rho as the slow index:
/// value(i, j) lives at i * n_R + j so each rho-row is contiguous in R.
/// Nonnegativity is a property of densities produced by the solver; the type
/// also carries signed differences (see diagnostics::beta_norm).
class DensityField {
 public:
  DensityField() = default;
  explicit DensityField(Grid2D grid, double fill = 0.0);
  DensityField(Grid2D grid, std::vector<double> values);

  /// Uniform density with total mass one.
  static DensityField uniform(const Grid2D& grid);
  /// Tabulate g at cell centres, then scale to unit mass.
  static DensityField from_function(const Grid2D& grid,
                                    const std::function<double(double, double)>& g);

  const Grid2D& grid() const noexcept { return grid_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return values_[i * grid_.n_R() + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * grid_.n_R() + j];
  }
  std::span<double> row(std::size_t i) noexcept {
    return std::span<double>(values_).subspan(i * grid_.n_R(), grid_.n_R());
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * grid_.n_R(), grid_.n_R());
  }

  double max_value() const;
  double min_value() const;

  /// Scale so that mass() == target. Throws on zero mass.
  void normalize(double target = 1.0);

  DensityField& operator+=(const DensityField& other);
  DensityField& operator-=(const DensityField& other);
  DensityField& operator*=(double s);

  /// Shift by whole cells: result(i, j) = this(i - di, j - dj), zero-filled.
  DensityField shifted(long di, long dj) const;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

DensityField operator-(DensityField a, const DensityField& b);
DensityField operator+(DensityField a, const DensityField& b);
DensityField operator*(double s, DensityField a);

/// Mean-field coefficients tabulated where the upwind scheme needs them.
/// a1 at rho faces drives the rho operator; a1 at rho centres and a2 at R faces
/// give the R velocity a = a1(rho_i) - a2(R_face). Centre values of a2 are
/// kept for diagnostics.
struct CoefficientField {
  std::vector<double> a1_at_rho_faces;    // n_rho + 1
  std::vector<double> a2_at_R_faces;      // n_R + 1
  std::vector<double> a1_at_rho_centers;  // n_rho
  std::vector<double> a2_at_R_centers;    // n_R
};

struct Marginals {
  std::vector<double> rho;  // length n_rho, sums to mass / h_rho
  std::vector<double> R;    // length n_R, sums to mass / h_R
};

/// Sum of cell values times cell area.
double mass(const DensityField& f);

/// (int rho f / int f, int R f / int f) by midpoint quadrature.
std::pair<double, double> center_of_mass(const DensityField& f);

/// Sum over cells of w(centre) * value * area.
double weighted_integral(const DensityField& f,
                         const std::function<double(double, double)>& w);

Marginals marginals(const DensityField& f);

/// Throws ConfigError if the grids differ.
void require_same_grid(const DensityField& a, const DensityField& b);

}  // namespace kinelo
