// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Alternating-minimization baselines sharing the solver's kernels:
//   alt_min  - weighted magnitude prune of W - L, then closed-form L (AltMin-lite)
//   oats     - the same alternation on the diag(X^T X)-weighted objective
//   eora     - a single alternation
// The prune step keeps the projected residual entries; no refit on the support.

#include <cstddef>
#include <vector>

#include "slr/config.hpp"
#include "slr/solver.hpp"

namespace slr {

struct AltMinConfig {
  std::size_t steps = 80;
  PruneWeighting prune_weighting = PruneWeighting::hessian_lite;
  Damping damping;
  LowRankMode mode = LowRankMode::exact;
  RsvdOptions rsvd;
  bool record_timing = false;

  void validate() const;
};

AltMinConfig altmin_config_from(const RunConfig& cfg, std::size_t rows, std::size_t cols);

SolveResult alt_min(const LayerProblem& problem, const AltMinConfig& cfg);
SolveResult oats(const LayerProblem& problem, const AltMinConfig& cfg);
SolveResult eora(const LayerProblem& problem, const AltMinConfig& cfg);

// diag(X^T X) with zeros floored at 1e-12 * max.
std::vector<double> oats_channel_weights(const Matrix& gram);
// 1/2 ||D (W - S - L)||_F^2 with D = diag(d).
double oats_surrogate(const LayerProblem& problem, const std::vector<double>& d, const Matrix& s, const Matrix& l);

}  // namespace slr
