// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "slr/matrix.hpp"

namespace slr {

/// Eigendecomposition of a symmetric matrix. `vectors` holds the eigenvectors
/// as columns; `values` is ascending.
struct SymEig {
  Matrix vectors;
  std::vector<double> values;
};

// Cyclic Jacobi. Throws Errc::not_symmetric when |h_ij - h_ji| exceeds 1e-10
// relative to max|h|, Errc::not_converged after the sweep cap.
SymEig sym_eig(const Matrix& h);

/// A strictly positive-definite weighting matrix H together with its cached
/// eigendecomposition H = U diag(s) U^T and the two square-root factors
///   sqrt_factor     = diag(s)^{1/2} U^T
///   inv_sqrt_factor = U diag(s)^{-1/2}
/// so that sqrt_factor^T sqrt_factor = H and inv_sqrt_factor * sqrt_factor = I.
class HOperator {
 public:
  static HOperator from_matrix(const Matrix& h);

  // The operator of c*H for c > 0, reusing the decomposition.
  HOperator scaled(double c) const;

  std::size_t dim() const noexcept { return h_.rows(); }
  const Matrix& matrix() const noexcept { return h_; }
  const SymEig& eig() const noexcept { return eig_; }
  const Matrix& sqrt_factor() const noexcept { return sqrt_; }
  const Matrix& inv_sqrt_factor() const noexcept { return inv_sqrt_; }

  Matrix apply(const Matrix& b) const { return matmul(h_, b); }

 private:
  Matrix h_;
  SymEig eig_;
  Matrix sqrt_;
  Matrix inv_sqrt_;
};

// (H + rho I)^{-1} B = U (diag(s) + rho I)^{-1} U^T B.
Matrix shifted_inverse_apply(const HOperator& hop, double rho, const Matrix& b);

struct RsvdOptions {
  std::size_t oversample = 10;
  std::size_t power_iters = 2;
  std::uint64_t seed = 0;
};

/// Rank-r factorization A ~ U diag(sigma) V^T, sigma descending.
struct TruncatedSvd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;

  Matrix reconstruct() const;
};

// Truncated SVD through the eigendecomposition of the smaller Gram matrix.
// Right singular vectors are sign-fixed (first nonzero component positive).
TruncatedSvd exact_svd(const Matrix& a, std::size_t r);

// Gaussian-sketch randomized SVD with power iterations; deterministic in seed.
TruncatedSvd randomized_svd(const Matrix& a, std::size_t r, const RsvdOptions& opts = {});

enum class LowRankMode { exact, randomized };

// Best rank-r approximation in Frobenius norm (Exact) or its sketched
// counterpart (Randomized).
Matrix rank_r_project(const Matrix& a, std::size_t r, LowRankMode mode = LowRankMode::exact,
                      const RsvdOptions& opts = {});

// argmin_{rank(L) <= r} || H^{1/2} (R - L) ||_F, computed in closed form as
// H^{-1/2} P_r(H^{1/2} R).
Matrix rank_r_weighted_fit(const HOperator& hop, const Matrix& residual, std::size_t r,
                           LowRankMode mode = LowRankMode::exact, const RsvdOptions& opts = {});

// Thin Q (m x l, orthonormal columns) of a Householder QR of Y (m x l, l <= m).
Matrix orthonormalize(const Matrix& y);

// Rank from column-pivoted Householder QR: number of |R_kk| > rel_tol * |R_00|.
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-8);

}  // namespace slr
