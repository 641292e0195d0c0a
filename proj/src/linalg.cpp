// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "slr/error.hpp"
#include "slr/kernels.hpp"
#include "slr/rng.hpp"

namespace slr {
namespace {

constexpr int kMaxJacobiSweeps = 60;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_rank(const Matrix& a, std::size_t r) {
  if (r > std::min(a.rows(), a.cols())) {
    fail(Errc::invariant, "rank " + std::to_string(r) + " exceeds min(dims) of " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()));
  }
}

// Top-r eigenpairs of a symmetric PSD Gram matrix, descending.
struct TopEig {
  Matrix vectors;  // n x r
  std::vector<double> values;
};

TopEig top_eigenpairs(const Matrix& gram, std::size_t r) {
  const SymEig eig = sym_eig(gram);
  const std::size_t n = gram.rows();
  TopEig top{Matrix(n, r), std::vector<double>(r)};
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t src = n - 1 - k;
    top.values[k] = std::max(eig.values[src], 0.0);
    for (std::size_t i = 0; i < n; ++i) top.vectors(i, k) = eig.vectors(i, src);
  }
  return top;
}

void fix_signs(Matrix& v, Matrix* paired) {
  for (std::size_t k = 0; k < v.cols(); ++k) {
    for (std::size_t i = 0; i < v.rows(); ++i) {
      if (v(i, k) == 0.0) continue;
      if (v(i, k) < 0.0) {
        for (std::size_t j = 0; j < v.rows(); ++j) v(j, k) = -v(j, k);
        if (paired != nullptr)
          for (std::size_t j = 0; j < paired->rows(); ++j) (*paired)(j, k) = -(*paired)(j, k);
      }
      break;
    }
  }
}

// u_k = a v_k / sigma_k; columns with sigma_k == 0 are left zero.
Matrix left_vectors(const Matrix& a, const Matrix& v, const std::vector<double>& sigma) {
  Matrix u = matmul(a, v);
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const double inv = sigma[k] > 0.0 ? 1.0 / sigma[k] : 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i) u(i, k) *= inv;
  }
  return u;
}

}  // namespace

SymEig sym_eig(const Matrix& h) {
  if (h.rows() != h.cols()) fail(Errc::shape, "sym_eig: matrix is not square");
  const std::size_t n = h.rows();
  const double scale_abs = max_abs(h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(h(i, j) - h(j, i)) > 1e-10 * scale_abs) {
        fail(Errc::not_symmetric, "sym_eig: input is not symmetric at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
      }
    }
  }
  if (!all_finite(h)) fail(Errc::numerical, "sym_eig: non-finite input");

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (h(i, j) + h(j, i));
  Matrix vt = Matrix::identity(n);  // rows are eigenvectors
  const double negligible = 1e-300 + 1e-18 * frobenius_norm(a);

  bool converged = n <= 1 || scale_abs == 0.0;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) <= negligible || std::abs(apq) <= kEps * std::sqrt(std::abs(app * aqq))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J, applied as a row rotation then the matching column one.
        kernels::rotate(c, s, a.row(p).data(), a.row(q).data(), n);
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        kernels::rotate(c, s, vt.row(p).data(), vt.row(q).data(), n);
        ++rotations;
      }
    }
    converged = rotations == 0;
  }
  if (!converged) fail(Errc::not_converged, "sym_eig: Jacobi sweep cap reached");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymEig out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    const auto src = vt.row(order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = src[i];
  }
  return out;
}

HOperator HOperator::from_matrix(const Matrix& h) {
  HOperator op;
  op.eig_ = sym_eig(h);
  op.h_ = h;
  const std::size_t n = h.rows();
  if (n > 0 && !(op.eig_.values.front() > 0.0)) {
    fail(Errc::numerical, "weighting matrix is not positive definite (min eigenvalue " +
                              std::to_string(op.eig_.values.front()) + ")");
  }
  std::vector<double> root(n), inv_root(n);
  for (std::size_t k = 0; k < n; ++k) {
    root[k] = std::sqrt(op.eig_.values[k]);
    inv_root[k] = 1.0 / root[k];
  }
  op.sqrt_ = scale_rows(transpose(op.eig_.vectors), root);
  op.inv_sqrt_ = scale_cols(op.eig_.vectors, inv_root);
  return op;
}

HOperator HOperator::scaled(double c) const {
  if (!(c > 0.0)) fail(Errc::invariant, "HOperator::scaled requires c > 0");
  HOperator op = *this;
  op.h_ *= c;
  for (double& v : op.eig_.values) v *= c;
  op.sqrt_ *= std::sqrt(c);
  op.inv_sqrt_ *= 1.0 / std::sqrt(c);
  return op;
}

Matrix shifted_inverse_apply(const HOperator& hop, double rho, const Matrix& b) {
  if (!(rho > 0.0)) fail(Errc::invariant, "shifted_inverse_apply requires rho > 0");
  if (b.rows() != hop.dim()) fail(Errc::shape, "shifted_inverse_apply: B has wrong row count");
  const auto& eig = hop.eig();
  std::vector<double> inv(eig.values.size());
  for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / (eig.values[k] + rho);
  return matmul(eig.vectors, scale_rows(matmul_tn(eig.vectors, b), inv));
}

Matrix TruncatedSvd::reconstruct() const { return matmul_nt(scale_cols(u, sigma), v); }

TruncatedSvd exact_svd(const Matrix& a, std::size_t r) {
  check_rank(a, r);
  const bool tall = a.cols() <= a.rows();
  const Matrix work = tall ? a : transpose(a);
  TopEig top = top_eigenpairs(matmul_tn(work, work), r);
  std::vector<double> sigma(r);
  for (std::size_t k = 0; k < r; ++k) sigma[k] = std::sqrt(top.values[k]);
  Matrix u = left_vectors(work, top.vectors, sigma);
  TruncatedSvd out = tall ? TruncatedSvd{std::move(u), std::move(sigma), std::move(top.vectors)}
                          : TruncatedSvd{std::move(top.vectors), std::move(sigma), std::move(u)};
  fix_signs(out.v, &out.u);
  return out;
}

TruncatedSvd randomized_svd(const Matrix& a, std::size_t r, const RsvdOptions& opts) {
  check_rank(a, r);
  const std::size_t width = std::min(r + opts.oversample, std::min(a.rows(), a.cols()));
  if (r == 0) return {Matrix(a.rows(), 0), {}, Matrix(a.cols(), 0)};
  Rng rng(opts.seed);
  const Matrix omega = rng.gaussian(a.cols(), width);
  Matrix q = orthonormalize(matmul(a, omega));
  for (std::size_t it = 0; it < opts.power_iters; ++it) {
    const Matrix z = orthonormalize(matmul_tn(a, q));
    q = orthonormalize(matmul(a, z));
  }
  const Matrix b = matmul_tn(q, a);  // width x cols
  const TopEig top = top_eigenpairs(matmul_nt(b, b), r);
  std::vector<double> sigma(r);
  for (std::size_t k = 0; k < r; ++k) sigma[k] = std::sqrt(top.values[k]);
  Matrix v = left_vectors(transpose(b), top.vectors, sigma);
  Matrix u = matmul(q, top.vectors);
  fix_signs(v, &u);
  return {std::move(u), std::move(sigma), std::move(v)};
}

Matrix rank_r_project(const Matrix& a, std::size_t r, LowRankMode mode, const RsvdOptions& opts) {
  check_rank(a, r);
  if (r == 0) return Matrix(a.rows(), a.cols());
  if (r == std::min(a.rows(), a.cols())) return a;
  if (mode == LowRankMode::randomized) return randomized_svd(a, r, opts).reconstruct();
  // Projecting onto the dominant singular subspace avoids dividing by sigma.
  if (a.cols() <= a.rows()) {
    const TopEig top = top_eigenpairs(matmul_tn(a, a), r);
    return matmul_nt(matmul(a, top.vectors), top.vectors);
  }
  const TopEig top = top_eigenpairs(matmul_nt(a, a), r);
  return matmul(top.vectors, matmul_tn(top.vectors, a));
}

Matrix rank_r_weighted_fit(const HOperator& hop, const Matrix& residual, std::size_t r, LowRankMode mode,
                           const RsvdOptions& opts) {
  if (residual.rows() != hop.dim()) fail(Errc::shape, "rank_r_weighted_fit: residual rows != dim(H)");
  check_rank(residual, r);
  if (r == 0) return Matrix(residual.rows(), residual.cols());
  if (r == std::min(residual.rows(), residual.cols())) return residual;
  const Matrix projected = rank_r_project(matmul(hop.sqrt_factor(), residual), r, mode, opts);
  return matmul(hop.inv_sqrt_factor(), projected);
}

Matrix orthonormalize(const Matrix& y) {
  const std::size_t m = y.rows();
  const std::size_t l = y.cols();
  if (l > m) fail(Errc::shape, "orthonormalize: more columns than rows");
  Matrix cols = transpose(y);  // row j = column j of Y
  std::vector<std::vector<double>> reflectors(l);
  for (std::size_t k = 0; k < l; ++k) {
    double* x = cols.row(k).data() + k;
    const std::size_t len = m - k;
    const double norm = std::sqrt(kernels::dot(x, x, len));
    std::vector<double>& v = reflectors[k];
    if (norm == 0.0) continue;
    v.assign(x, x + len);
    const double alpha = x[0] >= 0.0 ? -norm : norm;
    v[0] -= alpha;
    const double vnorm = std::sqrt(kernels::dot(v.data(), v.data(), len));
    if (vnorm == 0.0) {
      v.clear();
      continue;
    }
    kernels::scale(1.0 / vnorm, v.data(), len);
    for (std::size_t j = k; j < l; ++j) {
      double* cj = cols.row(j).data() + k;
      kernels::axpy(-2.0 * kernels::dot(v.data(), cj, len), v.data(), cj, len);
    }
  }
  Matrix qt(l, m);
  for (std::size_t j = 0; j < l; ++j) qt(j, j) = 1.0;
  for (std::size_t k = l; k-- > 0;) {
    const std::vector<double>& v = reflectors[k];
    if (v.empty()) continue;
    const std::size_t len = m - k;
    for (std::size_t j = 0; j < l; ++j) {
      double* qj = qt.row(j).data() + k;
      kernels::axpy(-2.0 * kernels::dot(v.data(), qj, len), v.data(), qj, len);
    }
  }
  return transpose(qt);
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix cols = transpose(a);
  const std::size_t steps = std::min(m, n);
  double lead = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      const double* cj = cols.row(j).data() + k;
      const double nj = kernels::dot(cj, cj, m - k);
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    const double rkk = std::sqrt(best_norm);
    if (k == 0) lead = rkk;
    if (lead == 0.0 || rkk <= rel_tol * lead) return k;
    if (best != k) std::swap_ranges(cols.row(k).begin(), cols.row(k).end(), cols.row(best).begin());
    double* x = cols.row(k).data() + k;
    const std::size_t len = m - k;
    std::vector<double> v(x, x + len);
    v[0] -= x[0] >= 0.0 ? -rkk : rkk;
    const double vnorm = std::sqrt(kernels::dot(v.data(), v.data(), len));
    if (vnorm == 0.0) continue;
    kernels::scale(1.0 / vnorm, v.data(), len);
    for (std::size_t j = k; j < n; ++j) {
      double* cj = cols.row(j).data() + k;
      kernels::axpy(-2.0 * kernels::dot(v.data(), cj, len), v.data(), cj, len);
    }
  }
  return steps;
}

}  // namespace slr
