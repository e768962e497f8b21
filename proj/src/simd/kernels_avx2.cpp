// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here may run before dispatch.cpp has checked the CPU.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kinelo/simd.hpp"

namespace kinelo::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// exp(x) for x in [-700, 0]; Cody-Waite reduction, degree-12 Taylor core.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d inv_ln2 = _mm256_set1_pd(1.44269504088896338700e+00);
  x = _mm256_max_pd(x, _mm256_set1_pd(-700.0));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, inv_ln2),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  static constexpr double c[13] = {
      1.0,
      1.0,
      1.0 / 2.0,
      1.0 / 6.0,
      1.0 / 24.0,
      1.0 / 120.0,
      1.0 / 720.0,
      1.0 / 5040.0,
      1.0 / 40320.0,
      1.0 / 362880.0,
      1.0 / 3628800.0,
      1.0 / 39916800.0,
      1.0 / 479001600.0,
  };
  __m256d p = _mm256_set1_pd(c[12]);
  for (int i = 11; i >= 0; --i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));

  // 2^k by exponent-field construction; k is in [-1010, 0].
  const __m128i ki = _mm256_cvtpd_epi32(k);
  __m256i e = _mm256_cvtepi32_epi64(ki);
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(e));
}

inline __m256d tanh_pd(__m256d z) {
  const __m256d sign = _mm256_and_pd(z, _mm256_set1_pd(-0.0));
  const __m256d az = abs_pd(z);
  const __m256d t = exp_nonpositive(_mm256_mul_pd(az, _mm256_set1_pd(-2.0)));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d th = _mm256_div_pd(_mm256_sub_pd(one, t), _mm256_add_pd(one, t));
  return _mm256_or_pd(th, sign);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 16 <= n; k += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 8), _mm256_loadu_pd(b + k + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 12), _mm256_loadu_pd(b + k + 12), s3);
  }
  for (; k + 4 <= n; k += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), s0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void stencil3_avx2(const double* prev, const double* cur, const double* next,
                   double cl, double cc, double cr, double* out, std::size_t n) {
  const __m256d vl = _mm256_set1_pd(cl);
  const __m256d vc = _mm256_set1_pd(cc);
  const __m256d vr = _mm256_set1_pd(cr);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d acc = _mm256_mul_pd(vl, _mm256_loadu_pd(prev + k));
    acc = _mm256_fmadd_pd(vc, _mm256_loadu_pd(cur + k), acc);
    acc = _mm256_fmadd_pd(vr, _mm256_loadu_pd(next + k), acc);
    _mm256_storeu_pd(out + k, acc);
  }
  for (; k < n; ++k) out[k] = cl * prev[k] + cc * cur[k] + cr * next[k];
}

double upwind_cell(const double* f, const double* v, double k_dt, double* out,
                   std::size_t n, std::size_t k) {
  const double diag = 1.0 - k_dt * (std::max(v[k + 1], 0.0) - std::min(v[k], 0.0));
  double s = diag * f[k];
  if (k > 0) s += k_dt * std::max(v[k], 0.0) * f[k - 1];
  if (k + 1 < n) s += -k_dt * std::min(v[k + 1], 0.0) * f[k + 1];
  out[k] = s;
  return diag;
}

double upwind_row_avx2(const double* f, const double* v, double k_dt, double* out,
                       std::size_t n) {
  if (n < 6) {
    double m = 1.0;
    for (std::size_t k = 0; k < n; ++k) m = std::min(m, upwind_cell(f, v, k_dt, out, n, k));
    return m;
  }
  double min_diag = upwind_cell(f, v, k_dt, out, n, 0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d kk = _mm256_set1_pd(k_dt);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d vmin = one;
  std::size_t k = 1;
  for (; k + 4 <= n - 1; k += 4) {
    const __m256d vl = _mm256_loadu_pd(v + k);
    const __m256d vr = _mm256_loadu_pd(v + k + 1);
    const __m256d in_left = _mm256_mul_pd(kk, _mm256_max_pd(vl, zero));
    const __m256d in_right = _mm256_mul_pd(kk, _mm256_max_pd(_mm256_sub_pd(zero, vr), zero));
    const __m256d out_rate = _mm256_sub_pd(_mm256_max_pd(vr, zero), _mm256_min_pd(vl, zero));
    const __m256d diag = _mm256_fnmadd_pd(kk, out_rate, one);
    __m256d acc = _mm256_mul_pd(diag, _mm256_loadu_pd(f + k));
    acc = _mm256_fmadd_pd(in_left, _mm256_loadu_pd(f + k - 1), acc);
    acc = _mm256_fmadd_pd(in_right, _mm256_loadu_pd(f + k + 1), acc);
    _mm256_storeu_pd(out + k, acc);
    vmin = _mm256_min_pd(vmin, diag);
  }
  min_diag = std::min(min_diag, hmin(vmin));
  for (; k < n; ++k) min_diag = std::min(min_diag, upwind_cell(f, v, k_dt, out, n, k));
  return min_diag;
}

double tanh_sum_avx2(double x, const double* y, std::size_t n, double c) {
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vc = _mm256_set1_pd(c);
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    s0 = _mm256_add_pd(s0, tanh_pd(_mm256_mul_pd(vc, _mm256_sub_pd(vx, _mm256_loadu_pd(y + k)))));
    s1 = _mm256_add_pd(s1, tanh_pd(_mm256_mul_pd(vc, _mm256_sub_pd(vx, _mm256_loadu_pd(y + k + 4)))));
  }
  for (; k + 4 <= n; k += 4) {
    s0 = _mm256_add_pd(s0, tanh_pd(_mm256_mul_pd(vc, _mm256_sub_pd(vx, _mm256_loadu_pd(y + k)))));
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; k < n; ++k) s += std::tanh(c * (x - y[k]));
  return s;
}

double weighted_abs_diff_avx2(const double* w, const double* f, const double* g,
                              std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t k = 0;
  if (g == nullptr) {
    for (; k + 8 <= n; k += 8) {
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), abs_pd(_mm256_loadu_pd(f + k)), s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k + 4), abs_pd(_mm256_loadu_pd(f + k + 4)), s1);
    }
  } else {
    for (; k + 8 <= n; k += 8) {
      const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(f + k), _mm256_loadu_pd(g + k));
      const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(f + k + 4), _mm256_loadu_pd(g + k + 4));
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), abs_pd(d0), s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k + 4), abs_pd(d1), s1);
    }
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; k < n; ++k) s += w[k] * std::abs(f[k] - (g ? g[k] : 0.0));
  return s;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{
      Backend::kAvx2,     &dot_avx2,      &stencil3_avx2,
      &upwind_row_avx2,   &tanh_sum_avx2, &weighted_abs_diff_avx2,
  };
  return &table;
}

}  // namespace kinelo::simd::detail
