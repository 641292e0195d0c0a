// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic layers, activations and toy blocks. Everything is a pure function
// of the seed.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "slr/block.hpp"
#include "slr/solver.hpp"

namespace slr {

// Entries N(0, 1/rows).
Matrix random_weight(std::size_t rows, std::size_t cols, Rng& rng);

// Correlated features with uneven channel scales: Z (G / sqrt(n)) diag(exp(z/2)).
Matrix correlated_activations(std::size_t samples, std::size_t n, Rng& rng);

struct PlantedLayer {
  Matrix w;
  Matrix s_star;
  Matrix a_star;  // n_in x r
  Matrix b_star;  // n_out x r
};

// W = S* + A* B*^T + noise * N(0, 1/rows) with S* satisfying the pattern.
PlantedLayer planted_layer(std::size_t rows, std::size_t cols, const SparsityPattern& pattern, std::size_t rank,
                           double noise, Rng& rng);

struct SyntheticLayer {
  LayerProblem problem;
  Matrix x;
};

SyntheticLayer random_layer_problem(std::size_t n_in, std::size_t n_out, std::size_t samples,
                                    const SparsityPattern& pattern, std::size_t rank, double lambda,
                                    std::uint64_t seed);

// Toy block weights with entries N(0, stddev^2) and unit norm scales.
BlockWeights toy_block(const BlockSpec& spec, std::uint64_t seed, double stddev);

// `count` sequences of seq_len x d_model with per-channel scales.
std::vector<Matrix> toy_sequences(const BlockSpec& spec, std::size_t count, std::uint64_t seed);

}  // namespace slr
