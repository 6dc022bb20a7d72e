// Compiled with -mavx2 -mfma. Only reached through avx2_kernels() after a
// runtime CPU check.

#include <immintrin.h>

#include <algorithm>

#include "temporef/simd/kernels.hpp"

namespace temporef::simd {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot_f64_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void combine4_avx2(float c0, const float* x0, float c1, const float* x1, float c2, const float* x2,
                   float c3, const float* x3, float* out, std::size_t n) {
  const __m256 v0 = _mm256_set1_ps(c0);
  const __m256 v1 = _mm256_set1_ps(c1);
  const __m256 v2 = _mm256_set1_ps(c2);
  const __m256 v3 = _mm256_set1_ps(c3);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_mul_ps(v0, _mm256_loadu_ps(x0 + i));
    acc = _mm256_fmadd_ps(v1, _mm256_loadu_ps(x1 + i), acc);
    acc = _mm256_fmadd_ps(v2, _mm256_loadu_ps(x2 + i), acc);
    acc = _mm256_fmadd_ps(v3, _mm256_loadu_ps(x3 + i), acc);
    _mm256_storeu_ps(out + i, acc);
  }
  for (; i < n; ++i) out[i] = c0 * x0[i] + c1 * x1[i] + c2 * x2[i] + c3 * x3[i];
}

float rectified_diff_sum_avx2(const float* prev, const float* cur, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  __m256 acc = zero;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(cur + i), _mm256_loadu_ps(prev + i));
    acc = _mm256_add_ps(acc, _mm256_max_ps(d, zero));
  }
  float total = hsum(acc);
  for (; i < n; ++i) total += std::max(0.0f, cur[i] - prev[i]);
  return total;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",
      &dot_avx2,
      &dot_f64_avx2,
      &axpy_avx2,
      &axpy_f64_avx2,
      &combine4_avx2,
      &rectified_diff_sum_avx2,
  };
  return table;
}

}  // namespace temporef::simd
