// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "slr/error.hpp"

namespace slr {
namespace {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[offset + i]) << (8 * i);
  return value;
}

std::size_t checked_numel(std::span<const std::uint64_t> shape) {
  std::size_t n = 1;
  for (std::uint64_t d : shape) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) fail(Errc::parse, "SLRT shape overflows");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor Tensor::from_matrix(const Matrix& m) {
  return {{m.rows(), m.cols()}, std::vector<double>(m.values().begin(), m.values().end())};
}

Tensor Tensor::from_vector(std::span<const double> v) { return {{v.size()}, std::vector<double>(v.begin(), v.end())}; }

Tensor Tensor::from_stack(std::span<const Matrix> stack) {
  Tensor t;
  if (stack.empty()) fail(Errc::shape, "cannot stack zero matrices");
  t.shape = {stack.size(), stack.front().rows(), stack.front().cols()};
  for (const Matrix& m : stack) {
    require_same_shape(m, stack.front(), "tensor stack");
    t.values.insert(t.values.end(), m.values().begin(), m.values().end());
  }
  return t;
}

std::size_t Tensor::numel() const { return checked_numel(shape); }

Matrix Tensor::as_matrix() const {
  switch (shape.size()) {
    case 1: return Matrix(1, shape[0], values);
    case 2: return Matrix(shape[0], shape[1], values);
    case 3: return Matrix(shape[0] * shape[1], shape[2], values);
    default: fail(Errc::shape, "tensor has unsupported rank");
  }
}

std::vector<Matrix> Tensor::as_stack() const {
  if (shape.size() == 2) return {as_matrix()};
  if (shape.size() != 3) fail(Errc::shape, "expected a 2-D or 3-D tensor");
  std::vector<Matrix> out;
  const std::size_t per = shape[1] * shape[2];
  for (std::size_t i = 0; i < shape[0]; ++i) {
    out.emplace_back(shape[1], shape[2],
                     std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(i * per),
                                         values.begin() + static_cast<std::ptrdiff_t>((i + 1) * per)));
  }
  return out;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype) {
  if (t.shape.empty() || t.shape.size() > 3) fail(Errc::shape, "SLRT supports 1 to 3 dimensions");
  if (t.numel() != t.values.size()) fail(Errc::shape, "tensor payload does not match its shape");
  const std::size_t width = dtype == DType::f32 ? 4 : 8;
  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 * t.shape.size() + width * t.values.size());
  for (char c : {'S', 'L', 'R', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kTensorVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(t.shape.size()));
  for (std::uint64_t d : t.shape) put_le<std::uint64_t>(out, d);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const double x = t.values[i];
    if (!std::isfinite(x)) fail(Errc::invariant, "tensor contains a non-finite value at index " + std::to_string(i));
    if (dtype == DType::f64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
    } else {
      const float f = static_cast<float>(x);
      if (!std::isfinite(f)) {
        fail(Errc::narrowing_overflow, "value " + std::to_string(x) + " at index " + std::to_string(i) +
                                           " is outside the f32 range");
      }
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) fail(Errc::truncated_payload, "SLRT header truncated");
  if (std::memcmp(bytes.data(), "SLRT", 4) != 0) fail(Errc::bad_magic, "not an SLRT file (bad magic)");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kTensorVersion) fail(Errc::unsupported_version, "unsupported SLRT version " + std::to_string(version));
  const std::uint8_t dtype = bytes[6];
  if (dtype > 1) fail(Errc::parse, "unknown SLRT dtype " + std::to_string(dtype));
  const std::uint8_t ndim = bytes[7];
  if (ndim < 1 || ndim > 3) fail(Errc::parse, "SLRT ndim must be 1..3, got " + std::to_string(ndim));
  const std::size_t header = 8 + 8 * static_cast<std::size_t>(ndim);
  if (bytes.size() < header) fail(Errc::truncated_payload, "SLRT shape truncated");
  Tensor t;
  for (std::size_t d = 0; d < ndim; ++d) t.shape.push_back(get_le<std::uint64_t>(bytes, 8 + 8 * d));
  const std::size_t numel = checked_numel(t.shape);
  const std::size_t width = dtype == 0 ? 4 : 8;
  const std::size_t expected = header + numel * width;
  if (bytes.size() < expected) {
    fail(Errc::truncated_payload, "SLRT payload truncated: " + std::to_string(bytes.size() - header) + " of " +
                                      std::to_string(numel * width) + " bytes");
  }
  if (bytes.size() > expected) fail(Errc::parse, "SLRT file has trailing bytes");
  t.values.resize(numel);
  for (std::size_t i = 0; i < numel; ++i) {
    const std::size_t off = header + i * width;
    t.values[i] = dtype == 0 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, off)))
                             : std::bit_cast<double>(get_le<std::uint64_t>(bytes, off));
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  const std::vector<std::uint8_t> bytes = encode_tensor(t, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Matrix& m, DType dtype) {
  write_tensor(path, Tensor::from_matrix(m), dtype);
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace slr
