// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/decompose.hpp"

#include "slr/baselines.hpp"

namespace slr {

SolveResult decompose(const LayerProblem& problem, const RunConfig& cfg) {
  cfg.validate_for_shape(problem.w_hat.rows(), problem.w_hat.cols());
  const AltMinConfig alt = altmin_config_from(cfg, problem.w_hat.rows(), problem.w_hat.cols());
  switch (cfg.method) {
    case Method::three_basil: return solve_3basil(problem, cfg);
    case Method::alt_min: return alt_min(problem, alt);
    case Method::oats: return oats(problem, alt);
    case Method::eora: return eora(problem, alt);
  }
  return solve_3basil(problem, cfg);
}

}  // namespace slr
