// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/rng.hpp"

namespace slr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(root ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) { return splitmix64(root ^ splitmix64(index + 1)); }

Matrix Rng::gaussian(std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = stddev * normal();
  return m;
}

}  // namespace slr
