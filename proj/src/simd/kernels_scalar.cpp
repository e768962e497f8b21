#include <algorithm>
#include <cmath>

#include "kinelo/simd.hpp"

namespace kinelo::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void stencil3_scalar(const double* prev, const double* cur, const double* next,
                     double cl, double cc, double cr, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = cl * prev[k] + cc * cur[k] + cr * next[k];
  }
}

double upwind_row_scalar(const double* f, const double* v, double k_dt,
                         double* out, std::size_t n) {
  double min_diag = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double in_left = k_dt * std::max(v[k], 0.0);
    const double in_right = -k_dt * std::min(v[k + 1], 0.0);
    const double diag =
        1.0 - k_dt * (std::max(v[k + 1], 0.0) - std::min(v[k], 0.0));
    double s = diag * f[k];
    if (k > 0) s += in_left * f[k - 1];
    if (k + 1 < n) s += in_right * f[k + 1];
    out[k] = s;
    min_diag = std::min(min_diag, diag);
  }
  return min_diag;
}

double tanh_sum_scalar(double x, const double* y, std::size_t n, double c) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::tanh(c * (x - y[k]));
  return s;
}

double weighted_abs_diff_scalar(const double* w, const double* f, const double* g,
                                std::size_t n) {
  double s = 0.0;
  if (g == nullptr) {
    for (std::size_t k = 0; k < n; ++k) s += w[k] * std::abs(f[k]);
  } else {
    for (std::size_t k = 0; k < n; ++k) s += w[k] * std::abs(f[k] - g[k]);
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Backend::kScalar,      &dot_scalar,      &stencil3_scalar,
      &upwind_row_scalar,    &tanh_sum_scalar, &weighted_abs_diff_scalar,
  };
  return table;
}

}  // namespace kinelo::simd::detail
