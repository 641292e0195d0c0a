// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "slr/kernels.hpp"

namespace slr::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), alpha));
  for (; i < n; ++i) x[i] *= alpha;
}

void rotate_neon(double c, double s, double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xi = vld1q_f64(x + i);
    const float64x2_t yi = vld1q_f64(y + i);
    vst1q_f64(x + i, vfmsq_n_f64(vmulq_n_f64(xi, c), yi, s));
    vst1q_f64(y + i, vfmaq_n_f64(vmulq_n_f64(yi, c), xi, s));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void gemm_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * lda;
    double* crow = c + i * ldc;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      float64x2_t c0 = vdupq_n_f64(0.0), c1 = c0, c2 = c0, c3 = c0;
      for (std::size_t p = 0; p < k; ++p) {
        const double ap = arow[p];
        const double* brow = b + p * ldb + j;
        c0 = vfmaq_n_f64(c0, vld1q_f64(brow), ap);
        c1 = vfmaq_n_f64(c1, vld1q_f64(brow + 2), ap);
        c2 = vfmaq_n_f64(c2, vld1q_f64(brow + 4), ap);
        c3 = vfmaq_n_f64(c3, vld1q_f64(brow + 6), ap);
      }
      vst1q_f64(crow + j, c0);
      vst1q_f64(crow + j + 2, c1);
      vst1q_f64(crow + j + 4, c2);
      vst1q_f64(crow + j + 6, c3);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b[p * ldb + j];
      crow[j] = acc;
    }
  }
}

}  // namespace

namespace detail {
const Table kNeonTable{Isa::neon, dot_neon, axpy_neon, scale_neon, rotate_neon, gemm_neon};
}  // namespace detail

}  // namespace slr::kernels
