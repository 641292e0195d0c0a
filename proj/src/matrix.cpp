// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slr/error.hpp"
#include "slr/kernels.hpp"

namespace slr {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) fail(Errc::shape, "matrix data length does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(Errc::shape, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "matrix +=");
  kernels::axpy(1.0, other.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "matrix -=");
  kernels::axpy(-1.0, other.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator*=(double alpha) {
  kernels::scale(alpha, data(), size());
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double alpha, Matrix a) { return a *= alpha; }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(Errc::shape, std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(Errc::shape, "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  if (a.cols() == 0) return c;
  kernels::gemm(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), b.data(), b.cols(), c.data(), c.cols());
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail(Errc::shape, "matmul_tn: row counts differ");
  return matmul(transpose(a), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(Errc::shape, "matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = kernels::dot(a.row(i).data(), b.row(j).data(), a.cols());
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

Matrix scale_rows(const Matrix& a, std::span<const double> d) {
  if (d.size() != a.rows()) fail(Errc::shape, "scale_rows: length mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i) kernels::scale(d[i], c.row(i).data(), a.cols());
  return c;
}

Matrix scale_cols(const Matrix& a, std::span<const double> d) {
  if (d.size() != a.cols()) fail(Errc::shape, "scale_cols: length mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) *= d[j];
  return c;
}

Matrix column_block(const Matrix& a, std::size_t first, std::size_t count) {
  if (first + count > a.cols()) fail(Errc::shape, "column_block out of range");
  Matrix c(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i) std::copy_n(a.row(i).data() + first, count, c.row(i).data());
  return c;
}

double frobenius_dot(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "frobenius_dot");
  return kernels::dot(a.data(), b.data(), a.size());
}

double frobenius_norm(const Matrix& a) {
  // Scaled accumulation keeps huge or tiny entries from over/underflowing.
  const double m = max_abs(a);
  if (m == 0.0 || !std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : a.values()) {
    const double y = x / m;
    acc += y * y;
  }
  return m * std::sqrt(acc);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

std::vector<double> diagonal_of(const Matrix& a) {
  std::vector<double> d(std::min(a.rows(), a.cols()));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a(i, i);
  return d;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace slr
