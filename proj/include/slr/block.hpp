// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// A small pre-norm Llama-style transformer block on one sequence x (seq x d):
//
//   h = x + Attn(RMSNorm_1(x)) Wo
//   y = h + (SiLU(n2 Wgate) * (n2 Wup)) Wdown,   n2 = RMSNorm_2(h)
//
// with causal multi-head softmax attention scaled by 1/sqrt(head_dim).
// Linear layers act as y = x W, so every W is n_in x n_out. No positional
// encoding.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "slr/matrix.hpp"
#include "slr/rng.hpp"
#include "slr/sparsity.hpp"

namespace slr {

enum class LinearId : std::size_t { q = 0, k, v, o, gate, up, down };
inline constexpr std::size_t kNumLinears = 7;
inline constexpr std::array<LinearId, kNumLinears> kAllLinears = {
    LinearId::q, LinearId::k, LinearId::v, LinearId::o, LinearId::gate, LinearId::up, LinearId::down};

std::string_view linear_name(LinearId id);
LinearId parse_linear(std::string_view name);

struct BlockSpec {
  std::size_t d_model = 8;
  std::size_t n_heads = 2;
  std::size_t d_ff = 16;
  std::size_t seq_len = 4;
  double norm_eps = 1e-6;

  std::size_t head_dim() const { return d_model / n_heads; }
  std::size_t in_dim(LinearId id) const;
  std::size_t out_dim(LinearId id) const;
  void validate() const;
};

struct BlockWeights {
  std::array<Matrix, kNumLinears> linear;
  std::vector<double> norm1;
  std::vector<double> norm2;

  Matrix& operator[](LinearId id) { return linear[static_cast<std::size_t>(id)]; }
  const Matrix& operator[](LinearId id) const { return linear[static_cast<std::size_t>(id)]; }

  static BlockWeights zeros(const BlockSpec& spec);
  // Linear weights N(0, stddev^2), norm scales 1.
  static BlockWeights random(const BlockSpec& spec, Rng& rng, double stddev);
  void validate(const BlockSpec& spec) const;
};

/// Intermediates of one sequence's forward pass.
struct SequenceTape {
  Matrix x;
  std::vector<double> r1;  // 1 / rms per token, first norm
  Matrix xhat1;
  Matrix n1;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, seq x seq
  Matrix attn;                // concatenated head outputs
  Matrix h;
  std::vector<double> r2;
  Matrix xhat2;
  Matrix n2;
  Matrix gate, up;
  Matrix mlp;  // SiLU(gate) * up
};

struct BlockTape {
  std::vector<SequenceTape> seqs;
};

struct BlockGrads {
  std::array<Matrix, kNumLinears> linear;
  std::vector<double> norm1;
  std::vector<double> norm2;
  std::vector<Matrix> dx;

  Matrix& operator[](LinearId id) { return linear[static_cast<std::size_t>(id)]; }
  const Matrix& operator[](LinearId id) const { return linear[static_cast<std::size_t>(id)]; }
};

Matrix forward_sequence(const BlockSpec& spec, const BlockWeights& w, const Matrix& x, SequenceTape* tape = nullptr);
std::vector<Matrix> block_forward(const BlockSpec& spec, const BlockWeights& w, std::span<const Matrix> xs,
                                  BlockTape* tape = nullptr);
// Gradients summed over the sequences in the tape.
BlockGrads block_backward(const BlockSpec& spec, const BlockWeights& w, const BlockTape& tape,
                          std::span<const Matrix> dys);

/// A linear layer as S + A B^T with S confined to a frozen support.
struct DecomposedLayer {
  Matrix s;
  Support mask;
  Matrix a;  // n_in x r
  Matrix b;  // n_out x r

  std::size_t rank() const noexcept { return a.cols(); }
  Matrix low_rank() const;
  Matrix effective() const;

  // Mask = support of S; A = U sqrt(sigma), B = V sqrt(sigma) from the rank-r SVD of L.
  static DecomposedLayer from_split(const Matrix& s, const Matrix& l, std::size_t rank);
  // The dense weight itself: full mask, rank 0.
  static DecomposedLayer dense(const Matrix& w);
};

struct DecomposedBlock {
  std::array<DecomposedLayer, kNumLinears> layers;
  std::vector<double> norm1;
  std::vector<double> norm2;

  DecomposedLayer& operator[](LinearId id) { return layers[static_cast<std::size_t>(id)]; }
  const DecomposedLayer& operator[](LinearId id) const { return layers[static_cast<std::size_t>(id)]; }

  BlockWeights effective() const;
};

}  // namespace slr
