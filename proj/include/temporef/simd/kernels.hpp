#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the spline resampler, the onset envelope
// and the dense layers. Every kernel has a scalar reference implementation;
// an AVX2/FMA variant is selected at runtime when the CPU supports it.
//
// All pointers may be unaligned. Kernels never read past `n`.

namespace temporef::simd {

struct KernelTable {
  std::string_view name;

  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);

  // out = c0*x0 + c1*x1 + c2*x2 + c3*x3
  void (*combine4_f32)(float c0, const float* x0, float c1, const float* x1,
                       float c2, const float* x2, float c3, const float* x3,
                       float* out, std::size_t n);

  // sum_i max(0, cur[i] - prev[i])
  float (*rectified_diff_sum_f32)(const float* prev, const float* cur, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Table chosen once per process: AVX2 when available unless the environment
// variable TEMPOREF_SIMD=scalar is set.
const KernelTable& active();

inline float dot(const float* a, const float* b, std::size_t n) { return active().dot_f32(a, b, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot_f64(a, b, n); }
inline void axpy(float alpha, const float* x, float* y, std::size_t n) { active().axpy_f32(alpha, x, y, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy_f64(alpha, x, y, n); }

}  // namespace temporef::simd
