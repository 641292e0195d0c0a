// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel inner loops used by the dense linear algebra. Each kernel has
// a scalar reference implementation and, where the target allows, an AVX2+FMA
// (x86-64) or NEON (aarch64) variant. The variant is chosen once at runtime
// from CPU features; SLR_KERNELS=scalar|avx2|neon overrides the choice.

#include <cstddef>
#include <string_view>

namespace slr::kernels {

enum class Isa { scalar, avx2, neon };

struct Table {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // Plane rotation: x' = c*x - s*y, y' = s*x + c*y.
  void (*rotate)(double c, double s, double* x, double* y, std::size_t n);
  // Row-major C (m x n) = A (m x k) * B (k x n), overwriting C.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc);
};

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
const Table& table(Isa isa);
const Table& active();
// Forces a variant for the rest of the process (tests and benchmarks).
void select(Isa isa);

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scale(double alpha, double* x, std::size_t n) { active().scale(alpha, x, n); }
inline void rotate(double c, double s, double* x, double* y, std::size_t n) { active().rotate(c, s, x, y, n); }
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double* c, std::size_t ldc) {
  active().gemm(m, n, k, a, lda, b, ldb, c, ldc);
}

namespace detail {
extern const Table kScalarTable;
#if defined(SLR_HAVE_AVX2)
extern const Table kAvx2Table;
#endif
#if defined(SLR_HAVE_NEON)
extern const Table kNeonTable;
#endif
}  // namespace detail

}  // namespace slr::kernels
