// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "slr/error.hpp"

namespace slr {
namespace {

// Weight lookup for the three accepted weight layouts.
class WeightView {
 public:
  WeightView(const Matrix* w, std::size_t rows, std::size_t cols) : w_(w), cols_(cols) {
    if (w_ == nullptr) return;
    if (w_->rows() == rows && w_->cols() == cols) {
      kind_ = Kind::full;
    } else if (w_->rows() == rows && w_->cols() == 1) {
      kind_ = Kind::per_row;
    } else if (w_->rows() == 1 && w_->cols() == cols) {
      kind_ = Kind::per_col;
    } else {
      fail(Errc::shape, "projection weights must be full, rows x 1 or 1 x cols");
    }
    for (double x : w_->values()) {
      if (!(x > 0.0) || !std::isfinite(x)) fail(Errc::invariant, "projection weights must be strictly positive");
    }
  }

  double at(std::size_t flat) const {
    if (w_ == nullptr) return 1.0;
    switch (kind_) {
      case Kind::full: return w_->data()[flat];
      case Kind::per_row: return w_->data()[flat / cols_];
      case Kind::per_col: return w_->data()[flat % cols_];
    }
    return 1.0;
  }

 private:
  enum class Kind { full, per_row, per_col };
  const Matrix* w_;
  std::size_t cols_;
  Kind kind_ = Kind::full;
};

Projection project_impl(const Matrix& a, const SparsityPattern& pattern, const Matrix* weights) {
  pattern.validate(a.rows(), a.cols());
  const WeightView w(weights, a.rows(), a.cols());
  std::vector<double> score(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = w.at(i) * a.data()[i];
    score[i] = x * x;
  }
  // Higher score first, lowest index on ties.
  const auto better = [&](std::size_t x, std::size_t y) { return score[x] > score[y] || (score[x] == score[y] && x < y); };

  Projection out{Matrix(a.rows(), a.cols()), Support(a.rows(), a.cols())};
  if (pattern.is_semi_structured()) {
    const std::size_t n = pattern.semi().n;
    const std::size_t m = pattern.semi().m;
    std::vector<std::size_t> group(m);
    for (std::size_t start = 0; start < a.size(); start += m) {
      std::iota(group.begin(), group.end(), start);
      std::partial_sort(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n), group.end(), better);
      for (std::size_t g = 0; g < n; ++g) out.support.set_flat(group[g], true);
    }
  } else {
    const std::size_t k = pattern.keep_count(a.rows(), a.cols());
    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    if (k < order.size()) {
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    }
    for (std::size_t g = 0; g < k; ++g) out.support.set_flat(order[g], true);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (out.support.contains_flat(i)) out.values.data()[i] = a.data()[i];
  }
  return out;
}

}  // namespace

SparsityPattern::SparsityPattern(Unstructured u) : variant_(u) {
  if (!(u.keep_fraction > 0.0 && u.keep_fraction <= 1.0)) {
    fail(Errc::invariant, "sparsity: keep_fraction must lie in (0, 1]");
  }
}

SparsityPattern::SparsityPattern(SemiStructured s) : variant_(s) {
  if (!(s.n > 0 && s.n < s.m)) fail(Errc::invariant, "sparsity: N:M requires 0 < N < M");
}

SparsityPattern SparsityPattern::parse(std::string_view text) {
  std::string t(text);
  if (t.rfind("unstructured:", 0) == 0) t = t.substr(13);
  const auto colon = t.find(':');
  try {
    if (colon != std::string::npos) {
      std::size_t used_n = 0, used_m = 0;
      const std::string ns = t.substr(0, colon), ms = t.substr(colon + 1);
      const long n = std::stol(ns, &used_n);
      const long m = std::stol(ms, &used_m);
      if (used_n != ns.size() || used_m != ms.size() || n < 0 || m < 0) throw std::invalid_argument(t);
      return SemiStructured{static_cast<std::size_t>(n), static_cast<std::size_t>(m)};
    }
    std::size_t used = 0;
    const double f = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return Unstructured{f};
  } catch (const std::logic_error&) {
    fail(Errc::parse, "sparsity: cannot parse '" + std::string(text) + "'");
  }
}

std::size_t SparsityPattern::keep_count(std::size_t rows, std::size_t cols) const {
  const std::size_t numel = rows * cols;
  if (is_semi_structured()) return numel / semi().m * semi().n;
  // nearbyint under the default rounding mode rounds half to even.
  return static_cast<std::size_t>(std::nearbyint(unstructured().keep_fraction * static_cast<double>(numel)));
}

void SparsityPattern::validate(std::size_t rows, std::size_t cols) const {
  (void)rows;
  if (is_semi_structured() && cols % semi().m != 0) {
    fail(Errc::invariant, "sparsity: M=" + std::to_string(semi().m) + " does not divide row length " +
                              std::to_string(cols));
  }
}

std::string SparsityPattern::to_string() const {
  std::ostringstream os;
  if (is_semi_structured()) {
    os << semi().n << ':' << semi().m;
  } else {
    os << unstructured().keep_fraction;
  }
  return os.str();
}

Support::Support(std::size_t rows, std::size_t cols, bool value)
    : rows_(rows), cols_(cols), mask_(rows * cols, value ? 1 : 0) {}

Support Support::of_nonzeros(const Matrix& a) {
  Support s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) s.mask_[i] = a.data()[i] != 0.0 ? 1 : 0;
  return s;
}

std::size_t Support::popcount() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

Matrix Support::as_matrix() const {
  Matrix m(rows_, cols_);
  for (std::size_t i = 0; i < mask_.size(); ++i) m.data()[i] = mask_[i];
  return m;
}

Projection project(const Matrix& a, const SparsityPattern& pattern) { return project_impl(a, pattern, nullptr); }

Projection project(const Matrix& a, const SparsityPattern& pattern, const Matrix& weights) {
  return project_impl(a, pattern, &weights);
}

Matrix apply_support(const Matrix& a, const Support& support) {
  if (a.rows() != support.rows() || a.cols() != support.cols()) fail(Errc::shape, "apply_support: shape mismatch");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (support.contains_flat(i)) out.data()[i] = a.data()[i];
  return out;
}

std::size_t support_symmetric_difference(const Support& a, const Support& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(Errc::shape, "support_symmetric_difference: shape mismatch");
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.mask().size(); ++i) count += (a.mask()[i] != b.mask()[i]) ? 1 : 0;
  return count;
}

bool satisfies_pattern(const Matrix& a, const SparsityPattern& pattern) {
  if (pattern.is_semi_structured()) {
    const std::size_t m = pattern.semi().m;
    if (a.cols() % m != 0) return false;
    for (std::size_t start = 0; start < a.size(); start += m) {
      std::size_t nz = 0;
      for (std::size_t g = 0; g < m; ++g) nz += a.data()[start + g] != 0.0 ? 1 : 0;
      if (nz > pattern.semi().n) return false;
    }
    return true;
  }
  return Support::of_nonzeros(a).popcount() <= pattern.keep_count(a.rows(), a.cols());
}

}  // namespace slr
