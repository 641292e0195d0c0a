// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Three-block ADMM for the layer-wise sparse-plus-low-rank problem
//
//   min_{S,L}  1/2 ||X W - X (S + L)||_F^2 + lambda/2 ||W - (S + L)||_F^2
//   s.t.       S satisfies the sparsity pattern, rank(L) <= r,
//
// split with a constrained copy D of S and scaled dual V. One iteration is
//
//   S <- (H + rho I)^{-1} (H (W - L) - V + rho D)
//   L <- H^{-1/2} P_r(H^{1/2} (W - S))
//   D <- P_S(S + V / rho)
//   V <- V + rho (S - D)
//
// with H the damped Hessian X^T X + lambda I + damping.

#include <cstddef>
#include <span>
#include <vector>

#include "slr/config.hpp"
#include "slr/linalg.hpp"
#include "slr/matrix.hpp"
#include "slr/report.hpp"
#include "slr/sparsity.hpp"

namespace slr {

/// One layer's decomposition problem. Only the Gram matrix of the calibration
/// activations enters the updates, so X itself is not stored.
struct LayerProblem {
  Matrix w_hat;  // n_in x n_out
  Matrix gram;   // n_in x n_in, X^T X
  double lambda = 0.0;
  SparsityPattern pattern;
  std::size_t rank = 0;

  static LayerProblem from_activations(Matrix w_hat, const Matrix& x, double lambda, SparsityPattern pattern,
                                       std::size_t rank);
  void validate() const;
};

// X^T X, symmetrized so later symmetry checks see an exactly symmetric matrix.
Matrix gram_of(const Matrix& x);

// X^T X accumulated over row blocks in order.
Matrix accumulate_gram(std::span<const Matrix> blocks);

// H' = X^T X + lambda I + diag_coeff diag(X^T X) + trace_coeff tr(X^T X) I
Matrix assemble_hessian(const LayerProblem& problem, const Damping& damping);
HOperator build_hessian(const LayerProblem& problem, const Damping& damping);

// 1/2 tr(E^T G E) + lambda/2 ||E||_F^2 with E = W - S - L.
double objective(const LayerProblem& problem, const Matrix& s, const Matrix& l);

struct AdmmState {
  Matrix s;
  Matrix l;
  Matrix d;
  Matrix v;
  double rho = 0.1;
  std::size_t iter = 0;
  Support d_support;
  // Support of D at the last rho-schedule update.
  Support schedule_support;
};

struct StepOptions {
  LowRankMode mode = LowRankMode::exact;
  // Randomized mode draws a fresh sketch per iteration from rsvd.seed ^ iter.
  RsvdOptions rsvd;
};

// S0 = D0 = P_S(W), L0 = weighted rank-r fit of W - S0, V0 = 0.
AdmmState init_admm(const LayerProblem& problem, const HOperator& hop, double rho0, const StepOptions& opts = {});

Matrix admm_s_update(const HOperator& hop, const Matrix& w_hat, const Matrix& l, const Matrix& d, const Matrix& v,
                     double rho);

// Applies the S, L, D, V updates in that order at the state's current rho.
AdmmState admm_step(AdmmState state, const LayerProblem& problem, const HOperator& hop, const StepOptions& opts = {});

// Step-function multiplier keyed to the support change s_t against k kept entries.
double step_multiplier(std::size_t support_change, std::size_t keep_count);
double update_rho(const RhoSchedule& schedule, double rho, std::size_t support_change, std::size_t keep_count);

struct SolveResult {
  Matrix s;
  Matrix l;
  RunReport report;
  // Per-iteration ||S^{t+1} - S^t||_F, ||L^{t+1} - L^t||_F, ||(S+L)^{t+1} - (S+L)^t||_F.
  std::vector<double> delta_s;
  std::vector<double> delta_l;
  std::vector<double> delta_sum;
};

SolveResult solve_3basil(const LayerProblem& problem, const RunConfig& cfg);

// Fraction of exactly-zero entries.
double sparsity_of(const Matrix& s);

}  // namespace slr
