// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "slr/matrix.hpp"

namespace slr {

struct Unstructured {
  double keep_fraction = 0.5;
  friend bool operator==(const Unstructured&, const Unstructured&) = default;
};

// N nonzeros kept in every M consecutive entries of a row.
struct SemiStructured {
  std::size_t n = 2;
  std::size_t m = 4;
  friend bool operator==(const SemiStructured&, const SemiStructured&) = default;
};

class SparsityPattern {
 public:
  SparsityPattern() : variant_(SemiStructured{}) {}
  SparsityPattern(Unstructured u);
  SparsityPattern(SemiStructured s);

  // "N:M" or a keep fraction such as "0.5" / "unstructured:0.5".
  static SparsityPattern parse(std::string_view text);

  bool is_semi_structured() const noexcept { return std::holds_alternative<SemiStructured>(variant_); }
  const SemiStructured& semi() const { return std::get<SemiStructured>(variant_); }
  const Unstructured& unstructured() const { return std::get<Unstructured>(variant_); }

  // Number of retained entries for a rows x cols matrix.
  std::size_t keep_count(std::size_t rows, std::size_t cols) const;
  // Throws Errc::invariant when the pattern cannot apply to the shape.
  void validate(std::size_t rows, std::size_t cols) const;
  std::string to_string() const;

  friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

 private:
  std::variant<Unstructured, SemiStructured> variant_;
};

/// Bitmask of retained positions, same shape as the matrix it came from.
class Support {
 public:
  Support() = default;
  Support(std::size_t rows, std::size_t cols, bool value = false);

  static Support of_nonzeros(const Matrix& a);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool contains(std::size_t i, std::size_t j) const { return mask_[i * cols_ + j] != 0; }
  bool contains_flat(std::size_t idx) const { return mask_[idx] != 0; }
  void set(std::size_t i, std::size_t j, bool value) { mask_[i * cols_ + j] = value ? 1 : 0; }
  void set_flat(std::size_t idx, bool value) { mask_[idx] = value ? 1 : 0; }
  std::size_t popcount() const;
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  Matrix as_matrix() const;

  friend bool operator==(const Support&, const Support&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> mask_;
};

struct Projection {
  Matrix values;
  Support support;
};

// Projection onto the pattern maximizing sum (w*a)^2 over retained entries;
// ties go to the lowest flat index. `weights` is either the shape of `a`, a
// rows x 1 column (one weight per row) or a 1 x cols row (one per column);
// every weight must be strictly positive.
Projection project(const Matrix& a, const SparsityPattern& pattern);
Projection project(const Matrix& a, const SparsityPattern& pattern, const Matrix& weights);

Matrix apply_support(const Matrix& a, const Support& support);
std::size_t support_symmetric_difference(const Support& a, const Support& b);

// True when the nonzeros of `a` fit the pattern (at most k entries overall,
// at most N per M-group).
bool satisfies_pattern(const Matrix& a, const SparsityPattern& pattern);

}  // namespace slr
