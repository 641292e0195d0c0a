// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Block-by-block compression. Inside a block the layers are compressed in
// dependency order (q, k, v -> o -> gate, up -> down), each against the
// activations produced by the layers already compressed; the compressed
// block's outputs then become the next block's calibration inputs.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "slr/block.hpp"
#include "slr/config.hpp"
#include "slr/report.hpp"
#include "slr/tm.hpp"

namespace slr {

struct BlockParams {
  BlockSpec spec;
  BlockWeights weights;
};

struct CompressedBlock {
  DecomposedBlock block;
  std::array<RunReport, kNumLinears> reports;
  // Block output error before and after refinement (equal when TM is off).
  double error_layerwise = 0.0;
  double error_final = 0.0;
  std::optional<std::vector<double>> tm_epoch_loss;
};

// Stacks the rows of `parts` into one matrix.
Matrix stack_rows(std::span<const Matrix> parts);

// Calibration activations at the input of `id`, given the block's current weights.
Matrix layer_inputs(const BlockSpec& spec, const BlockWeights& w, std::span<const Matrix> xs, LinearId id);

// `workers` > 1 solves independent layers of a group concurrently; results do
// not depend on it.
CompressedBlock compress_block(const BlockSpec& spec, const BlockWeights& dense, std::span<const Matrix> xs,
                               const RunConfig& cfg, std::size_t block_index = 0, std::size_t workers = 1);

struct CascadeResult {
  std::vector<CompressedBlock> blocks;
  // inputs[i] are the calibration inputs block i was compressed against;
  // inputs.back() is the output of the last compressed block.
  std::vector<std::vector<Matrix>> inputs;
};

CascadeResult cascade_compress(std::span<const BlockParams> blocks, std::vector<Matrix> x0, const RunConfig& cfg,
                               std::size_t workers = 1);

}  // namespace slr
