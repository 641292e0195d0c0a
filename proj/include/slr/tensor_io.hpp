// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// SLRT binary tensor container, little-endian throughout:
//
//   offset 0   4 bytes   magic "SLRT"
//          4   u16       version (= 1)
//          6   u8        dtype (0 = f32, 1 = f64)
//          7   u8        ndim (1..3)
//          8   ndim*u64  shape
//          ... payload   row-major values
//
// f32 payloads are widened to f64 on read; f64 values are narrowed with
// round-to-nearest-even on write and out-of-range values are rejected.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "slr/matrix.hpp"

namespace slr {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr std::uint16_t kTensorVersion = 1;

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;

  static Tensor from_matrix(const Matrix& m);
  static Tensor from_vector(std::span<const double> v);
  // Stacks equally-shaped matrices into a (count x rows x cols) tensor.
  static Tensor from_stack(std::span<const Matrix> stack);

  std::size_t numel() const;
  // ndim 1 -> 1 x n; ndim 2 -> as is; ndim 3 -> (d0*d1) x d2.
  Matrix as_matrix() const;
  // ndim 3 -> d0 matrices of d1 x d2; ndim 2 -> one matrix.
  std::vector<Matrix> as_stack() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::f64);
void write_tensor(const std::filesystem::path& path, const Matrix& m, DType dtype = DType::f64);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace slr
