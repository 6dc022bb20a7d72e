#include "temporef/simd/kernels.hpp"

#include <algorithm>

namespace temporef::simd {
namespace {

template <typename T>
T dot_ref(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy_ref(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void combine4_ref(float c0, const float* x0, float c1, const float* x1, float c2, const float* x2,
                  float c3, const float* x3, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c0 * x0[i] + c1 * x1[i] + c2 * x2[i] + c3 * x3[i];
}

float rectified_diff_sum_ref(const float* prev, const float* cur, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += std::max(0.0f, cur[i] - prev[i]);
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",
      &dot_ref<float>,
      &dot_ref<double>,
      &axpy_ref<float>,
      &axpy_ref<double>,
      &combine4_ref,
      &rectified_diff_sum_ref,
  };
  return table;
}

}  // namespace temporef::simd
