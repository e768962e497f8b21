#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64, an AVX2+FMA version. The active table is chosen once at startup
// from CPU features; KINELO_SIMD=scalar|avx2 overrides.
//
// The variants agree to rounding, not bitwise: the vector versions use a
// different summation order. Stencil kernels produce nonnegative output from
// nonnegative input and nonnegative coefficients in both variants.

#include <cstddef>
#include <string_view>

namespace kinelo::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;

  /// sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// out[k] = cl * prev[k] + cc * cur[k] + cr * next[k]
  void (*stencil3)(const double* prev, const double* cur, const double* next,
                   double cl, double cc, double cr, double* out, std::size_t n);

  /// One donor-cell step along a contiguous row of n cells.
  /// v has n + 1 face velocities (v[0], v[n] are walls and must be 0).
  /// out[k] = k_dt * v+[k] f[k-1] + (1 - k_dt (v+[k+1] - v-[k])) f[k]
  ///          - k_dt * v-[k+1] f[k+1]
  /// Returns the smallest diagonal coefficient (negative means CFL violated).
  double (*upwind_row)(const double* f, const double* v, double k_dt,
                       double* out, std::size_t n);

  /// sum_k tanh(c * (x - y[k]))
  double (*tanh_sum)(double x, const double* y, std::size_t n, double c);

  /// sum_k w[k] * |f[k] - g[k]|; g may be null (treated as zero).
  double (*weighted_abs_diff)(const double* w, const double* f, const double* g,
                              std::size_t n);
};

/// Table for the running process (auto-detected on first use).
const KernelTable& kernels();

/// Table for a specific backend; throws ConfigError if unavailable.
const KernelTable& kernels(Backend b);

bool available(Backend b);

/// Force the process-wide backend (tests, `run.simd` config key).
void set_backend(Backend b);

std::string_view name(Backend b);
Backend parse_backend(std::string_view s);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // null when not compiled in
}  // namespace detail

}  // namespace kinelo::simd
