// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

LayerProblem LayerProblem::from_activations(Matrix w_hat, const Matrix& x, double lambda, SparsityPattern pattern,
                                            std::size_t rank) {
  if (x.cols() != w_hat.rows()) fail(Errc::shape, "activations width does not match weight rows");
  LayerProblem p{std::move(w_hat), gram_of(x), lambda, pattern, rank};
  p.validate();
  return p;
}

void LayerProblem::validate() const {
  if (gram.rows() != gram.cols() || gram.rows() != w_hat.rows()) {
    fail(Errc::shape, "Gram matrix must be n_in x n_in with n_in = rows(W)");
  }
  if (!(lambda >= 0.0)) fail(Errc::invariant, "lambda must be non-negative");
  if (rank > std::min(w_hat.rows(), w_hat.cols())) fail(Errc::invariant, "rank exceeds min(dims)");
  if (!all_finite(w_hat) || !all_finite(gram)) fail(Errc::numerical, "problem data contains non-finite values");
  const double scale = std::max(1.0, max_abs(gram));
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = i + 1; j < gram.cols(); ++j)
      if (std::abs(gram(i, j) - gram(j, i)) > 1e-10 * scale) fail(Errc::not_symmetric, "Gram matrix is not symmetric");
  pattern.validate(w_hat.rows(), w_hat.cols());
}

Matrix gram_of(const Matrix& x) {
  Matrix g = matmul_tn(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j) {
      const double m = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = m;
      g(j, i) = m;
    }
  return g;
}

Matrix accumulate_gram(std::span<const Matrix> blocks) {
  if (blocks.empty()) fail(Errc::shape, "no activation blocks");
  Matrix g(blocks.front().cols(), blocks.front().cols());
  for (const Matrix& x : blocks) g += gram_of(x);
  return g;
}

Matrix assemble_hessian(const LayerProblem& problem, const Damping& damping) {
  const std::size_t n = problem.gram.rows();
  Matrix h = problem.gram;
  const double tr = trace(problem.gram);
  for (std::size_t i = 0; i < n; ++i) {
    h(i, i) += problem.lambda;
    if (damping.enabled) h(i, i) += damping.diag_coeff * problem.gram(i, i) + damping.trace_coeff * tr;
  }
  return h;
}

HOperator build_hessian(const LayerProblem& problem, const Damping& damping) {
  return HOperator::from_matrix(assemble_hessian(problem, damping));
}

double objective(const LayerProblem& problem, const Matrix& s, const Matrix& l) {
  Matrix e = problem.w_hat - s;
  e -= l;
  const Matrix ge = matmul(problem.gram, e);
  return 0.5 * frobenius_dot(e, ge) + 0.5 * problem.lambda * frobenius_dot(e, e);
}

AdmmState init_admm(const LayerProblem& problem, const HOperator& hop, double rho0, const StepOptions& opts) {
  Projection p = project(problem.w_hat, problem.pattern);
  AdmmState st;
  st.s = p.values;
  st.d = std::move(p.values);
  st.d_support = p.support;
  st.schedule_support = std::move(p.support);
  st.l = rank_r_weighted_fit(hop, problem.w_hat - st.s, problem.rank, opts.mode, opts.rsvd);
  st.v = Matrix(problem.w_hat.rows(), problem.w_hat.cols());
  st.rho = rho0;
  return st;
}

Matrix admm_s_update(const HOperator& hop, const Matrix& w_hat, const Matrix& l, const Matrix& d, const Matrix& v,
                     double rho) {
  Matrix rhs = hop.apply(w_hat - l);
  rhs -= v;
  rhs += rho * d;
  return shifted_inverse_apply(hop, rho, rhs);
}

AdmmState admm_step(AdmmState state, const LayerProblem& problem, const HOperator& hop, const StepOptions& opts) {
  const double rho = state.rho;
  state.s = admm_s_update(hop, problem.w_hat, state.l, state.d, state.v, rho);

  RsvdOptions rsvd = opts.rsvd;
  rsvd.seed = opts.rsvd.seed ^ static_cast<std::uint64_t>(state.iter);
  state.l = rank_r_weighted_fit(hop, problem.w_hat - state.s, problem.rank, opts.mode, rsvd);

  Matrix shifted = state.v;
  shifted *= 1.0 / rho;
  shifted += state.s;
  Projection p = project(shifted, problem.pattern);
  state.d = std::move(p.values);
  state.d_support = std::move(p.support);

  Matrix gap = state.s - state.d;
  gap *= rho;
  state.v += gap;
  ++state.iter;
  return state;
}

double step_multiplier(std::size_t support_change, std::size_t keep_count) {
  const double s = static_cast<double>(support_change);
  const double k = static_cast<double>(keep_count);
  if (s >= 0.1 * k) return 1.1;
  if (s >= 0.005 * k) return 1.05;
  if (s >= 0.5) return 1.02;
  return 1.0;
}

double update_rho(const RhoSchedule& schedule, double rho, std::size_t support_change, std::size_t keep_count) {
  switch (schedule.kind) {
    case RhoSchedule::Kind::step_function: return rho * step_multiplier(support_change, keep_count);
    case RhoSchedule::Kind::geometric: return rho * schedule.factor;
    case RhoSchedule::Kind::constant: return rho;
  }
  return rho;
}

double sparsity_of(const Matrix& s) {
  if (s.empty()) return 0.0;
  const auto zeros = std::count(s.values().begin(), s.values().end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(s.size());
}

SolveResult solve_3basil(const LayerProblem& problem, const RunConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  problem.validate();
  cfg.validate_for_shape(problem.w_hat.rows(), problem.w_hat.cols());

  const HOperator raw = build_hessian(problem, cfg.damping);
  const double n = static_cast<double>(problem.w_hat.rows());
  const double h_scale = cfg.normalize_hessian ? trace(raw.matrix()) / n : 1.0;
  const HOperator hop = cfg.normalize_hessian ? raw.scaled(1.0 / h_scale) : raw;

  StepOptions opts;
  opts.mode = cfg.low_rank_mode_for(problem.w_hat.rows(), problem.w_hat.cols());
  opts.rsvd = {cfg.rsvd_oversample, cfg.rsvd_power_iters, derive_seed(cfg.seed, "rsvd")};

  AdmmState state = init_admm(problem, hop, cfg.rho0, opts);
  const Matrix s0 = state.s;
  const Matrix l0 = state.l;

  SolveResult result;
  result.report.method = std::string(method_name(Method::three_basil));
  result.report.label = "3BASiL";
  result.report.initial_objective = objective(problem, s0, l0);

  const std::size_t keep = problem.pattern.keep_count(problem.w_hat.rows(), problem.w_hat.cols());
  const double tol = cfg.tol_abs + cfg.tol_rel * frobenius_norm(problem.w_hat);
  std::string stop_reason = "max_iters";

  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    const auto start = Clock::now();
    const Matrix prev_s = state.s;
    const Matrix prev_l = state.l;
    const Support prev_support = state.d_support;
    const double rho_used = state.rho;

    state = admm_step(std::move(state), problem, hop, opts);

    IterationRecord rec;
    rec.iter = state.iter;
    rec.objective = objective(problem, state.s, state.l);
    rec.primal_residual = frobenius_norm(state.s - state.d);
    rec.rho = rho_used;
    rec.support_change = support_symmetric_difference(prev_support, state.d_support);

    result.delta_s.push_back(frobenius_norm(state.s - prev_s));
    result.delta_l.push_back(frobenius_norm(state.l - prev_l));
    result.delta_sum.push_back(frobenius_norm((state.s + state.l) - (prev_s + prev_l)));

    if (cfg.schedule.kind == RhoSchedule::Kind::step_function) {
      if (state.iter % cfg.schedule.period == 0) {
        const std::size_t s_t = support_symmetric_difference(state.d_support, state.schedule_support);
        state.rho = update_rho(cfg.schedule, state.rho, s_t, keep);
        state.schedule_support = state.d_support;
        rec.schedule_change = s_t;
      }
    } else {
      state.rho = update_rho(cfg.schedule, state.rho, 0, keep);
    }
    state.rho = std::min(state.rho, cfg.rho_cap);

    if (cfg.record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
    result.report.records.push_back(rec);

    if (!std::isfinite(rec.objective)) {
      fail(Errc::numerical, "3BASiL objective became non-finite at iteration " + std::to_string(state.iter));
    }
    if (rec.primal_residual <= tol) {
      stop_reason = "primal_residual";
      break;
    }
  }

  // The deliverable is the feasible copy D with L refit against it.
  Matrix s_final = state.d;
  Matrix l_final = rank_r_weighted_fit(hop, problem.w_hat - s_final, problem.rank, opts.mode,
                                       RsvdOptions{opts.rsvd.oversample, opts.rsvd.power_iters,
                                                   opts.rsvd.seed ^ static_cast<std::uint64_t>(state.iter)});
  double final_obj = objective(problem, s_final, l_final);
  bool returned_initial = false;
  if (!(final_obj <= result.report.initial_objective)) {
    s_final = s0;
    l_final = l0;
    final_obj = result.report.initial_objective;
    returned_initial = true;
  }

  result.report.final_objective = final_obj;
  result.report.final_rank = numerical_rank(l_final);
  result.report.final_sparsity = sparsity_of(s_final);
  result.report.metadata = {
      {"pattern", problem.pattern.to_string()},
      {"rank", problem.rank},
      {"lambda", problem.lambda},
      {"rho0", cfg.rho0},
      {"hessian_scale", h_scale},
      {"low_rank_mode", opts.mode == LowRankMode::exact ? "exact" : "randomized"},
      {"rsvd_seed_policy", "per-iteration sketch seed = rsvd stream seed xor iteration"},
      {"stop_reason", stop_reason},
      {"returned_initial", returned_initial},
  };
  result.s = std::move(s_final);
  result.l = std::move(l_final);
  return result;
}

}  // namespace slr
