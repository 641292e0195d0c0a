// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Transformer matching: jointly refine the sparse values (on their frozen
// supports) and the low-rank factors of every layer in a block so that the
// compressed block reproduces the dense block's outputs,
//
//   min  sum_n || T(X_n; W) - T(X_n; S + A B^T) ||_F^2.

#include <cstdint>
#include <span>
#include <vector>

#include "slr/block.hpp"
#include "slr/config.hpp"

namespace slr {

// sum_n ||T(X_n; dense) - T(X_n; compressed)||_F^2
double block_error(const BlockSpec& spec, const BlockWeights& dense, const BlockWeights& compressed,
                   std::span<const Matrix> xs);

struct TmResult {
  DecomposedBlock block;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  // Full-calibration loss after each epoch.
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
  // Epoch whose parameters were returned (0 = the initial point).
  std::size_t best_epoch = 0;
};

// Adam over {S on mask, A, B} (plus norm scales when hyper.train_norms), with
// cosine-annealed learning rate over epochs * ceil(C / batch) steps. Batches
// are drawn from a per-epoch shuffle seeded by `seed`. Returns the best
// parameters seen, so final_loss <= initial_loss.
TmResult tm_refine(const BlockSpec& spec, const BlockWeights& dense, DecomposedBlock init, std::span<const Matrix> xs,
                   const TmHyper& hyper, std::uint64_t seed);

}  // namespace slr
