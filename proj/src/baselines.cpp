// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>

#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

void AltMinConfig::validate() const {
  if (steps < 1) fail(Errc::invariant, "steps must be >= 1");
}

AltMinConfig altmin_config_from(const RunConfig& cfg, std::size_t rows, std::size_t cols) {
  AltMinConfig out;
  out.steps = cfg.method == Method::eora ? 1 : cfg.steps;
  out.prune_weighting = cfg.prune_weighting;
  out.damping = cfg.damping;
  out.mode = cfg.low_rank_mode_for(rows, cols);
  out.rsvd = {cfg.rsvd_oversample, cfg.rsvd_power_iters, derive_seed(cfg.seed, "rsvd")};
  out.record_timing = cfg.record_timing;
  return out;
}

namespace {

Matrix column_of(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }

using Surrogate = std::function<double(const Matrix&, const Matrix&)>;

// Shared alternation: S <- P_S(W - L; weights), L <- fit(hop, W - S).
SolveResult alternate(const LayerProblem& problem, const AltMinConfig& cfg, const HOperator& hop,
                      const Matrix& weights, const Surrogate& surrogate) {
  using Clock = std::chrono::steady_clock;
  const std::size_t rows = problem.w_hat.rows();
  const std::size_t cols = problem.w_hat.cols();

  SolveResult result;
  Matrix l(rows, cols);
  Matrix s(rows, cols);
  Support prev_support(rows, cols);
  result.report.initial_objective = objective(problem, s, l);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto start = Clock::now();
    Projection p = project(problem.w_hat - l, problem.pattern, weights);
    const Matrix prev_s = s;
    const Matrix prev_l = l;
    s = std::move(p.values);

    RsvdOptions rsvd = cfg.rsvd;
    rsvd.seed = cfg.rsvd.seed ^ static_cast<std::uint64_t>(step);
    l = rank_r_weighted_fit(hop, problem.w_hat - s, problem.rank, cfg.mode, rsvd);

    IterationRecord rec;
    rec.iter = step + 1;
    rec.objective = objective(problem, s, l);
    rec.support_change = step == 0 ? p.support.popcount() : support_symmetric_difference(prev_support, p.support);
    if (surrogate) rec.surrogate = surrogate(s, l);
    if (cfg.record_timing) rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.report.records.push_back(rec);
    result.delta_s.push_back(frobenius_norm(s - prev_s));
    result.delta_l.push_back(frobenius_norm(l - prev_l));
    result.delta_sum.push_back(frobenius_norm((s + l) - (prev_s + prev_l)));
    prev_support = std::move(p.support);

    if (!std::isfinite(rec.objective)) {
      fail(Errc::numerical, "objective became non-finite at step " + std::to_string(step + 1));
    }
  }

  result.report.final_objective = objective(problem, s, l);
  result.report.final_rank = numerical_rank(l);
  result.report.final_sparsity = sparsity_of(s);
  result.report.metadata = {
      {"pattern", problem.pattern.to_string()},
      {"rank", problem.rank},
      {"lambda", problem.lambda},
      {"steps", cfg.steps},
      {"low_rank_mode", cfg.mode == LowRankMode::exact ? "exact" : "randomized"},
  };
  result.s = std::move(s);
  result.l = std::move(l);
  return result;
}

}  // namespace

SolveResult alt_min(const LayerProblem& problem, const AltMinConfig& cfg) {
  problem.validate();
  cfg.validate();
  const HOperator hop = build_hessian(problem, cfg.damping);

  std::vector<double> w = cfg.prune_weighting == PruneWeighting::hessian_lite ? diagonal_of(hop.matrix())
                                                                              : diagonal_of(problem.gram);
  const double floor = 1e-12 * std::max(1e-300, *std::max_element(w.begin(), w.end()));
  for (double& x : w) x = std::sqrt(std::max(x, floor));

  SolveResult r = alternate(problem, cfg, hop, column_of(w), {});
  r.report.method = std::string(method_name(Method::alt_min));
  r.report.label = "AltMin-lite (weighted magnitude prune, closed-form low-rank)";
  r.report.metadata["prune_weighting"] =
      cfg.prune_weighting == PruneWeighting::hessian_lite ? "hessian_lite" : "diag_only";
  return r;
}

SolveResult eora(const LayerProblem& problem, const AltMinConfig& cfg) {
  AltMinConfig one = cfg;
  one.steps = 1;
  SolveResult r = alt_min(problem, one);
  r.report.method = std::string(method_name(Method::eora));
  r.report.label = "EoRA (one prune, one closed-form low-rank correction)";
  return r;
}

std::vector<double> oats_channel_weights(const Matrix& gram) {
  std::vector<double> d = diagonal_of(gram);
  if (d.empty()) fail(Errc::shape, "empty Gram matrix");
  const double mx = *std::max_element(d.begin(), d.end());
  if (!(mx > 0.0)) fail(Errc::numerical, "diag(X^T X) is identically zero");
  const double floor = 1e-12 * mx;
  for (double& x : d) x = std::max(x, floor);
  return d;
}

double oats_surrogate(const LayerProblem& problem, const std::vector<double>& d, const Matrix& s, const Matrix& l) {
  Matrix e = problem.w_hat - s;
  e -= l;
  const Matrix de = scale_rows(e, d);
  return 0.5 * frobenius_dot(de, de);
}

SolveResult oats(const LayerProblem& problem, const AltMinConfig& cfg) {
  problem.validate();
  cfg.validate();
  const std::vector<double> d = oats_channel_weights(problem.gram);
  std::vector<double> d2(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) d2[i] = d[i] * d[i];
  const HOperator hop = HOperator::from_matrix(Matrix::diagonal(d2));

  SolveResult r = alternate(problem, cfg, hop, column_of(d),
                            [&](const Matrix& s, const Matrix& l) { return oats_surrogate(problem, d, s, l); });
  r.report.method = std::string(method_name(Method::oats));
  r.report.label = "OATS (diag(X^T X)-weighted alternating minimization)";
  r.report.metadata["outliers"] = "not modelled separately";
  return r;
}

}  // namespace slr
