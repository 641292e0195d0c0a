// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "../oracles.hpp"
#include "slr/baselines.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"
#include "slr/solver.hpp"
#include "slr/synthetic.hpp"

using namespace slr;

namespace {

LayerProblem with_gram(Matrix w, Matrix g, double lambda, SparsityPattern pat, std::size_t r) {
  return LayerProblem{std::move(w), std::move(g), lambda, pat, r};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

}  // namespace

TEST_CASE("build_hessian") {
  const Matrix w(2, 4);
  const Matrix h0 = assemble_hessian(with_gram(w, Matrix(2, 2), 1.0, SemiStructured{2, 4}, 0), Damping{});
  CHECK(h0 == Matrix::identity(2));
  const Matrix h1 = assemble_hessian(with_gram(w, Matrix::identity(2), 0.0, SemiStructured{2, 4}, 0), Damping{});
  CHECK(oracle::max_abs_diff(h1, 1.015 * Matrix::identity(2)) < 1e-15);

  Rng rng(1);
  const Matrix x = rng.gaussian(3, 6);  // rank-deficient Gram
  const LayerProblem p = LayerProblem::from_activations(rng.gaussian(6, 4), x, 0.0, SemiStructured{2, 4}, 1);
  const HOperator hop = build_hessian(p, Damping{});
  CHECK(hop.eig().values.front() > 0.0);
  CHECK_THROWS_AS(build_hessian(p, Damping{false, 0, 0}), Error);
}

TEST_CASE("update_rho step function") {
  const RhoSchedule step = RhoSchedule::step_function();
  CHECK(update_rho(step, 2.0, 0, 100) == 2.0);
  CHECK(update_rho(step, 1.0, 12, 100) == doctest::Approx(1.1));
  CHECK(update_rho(step, 1.0, 3, 1000) == doctest::Approx(1.02));
  CHECK(update_rho(step, 1.0, 5, 1000) == doctest::Approx(1.05));
  CHECK(update_rho(step, 1.0, 100, 1000) == doctest::Approx(1.1));
  CHECK(step_multiplier(1, 10000) == 1.02);
  CHECK(update_rho(RhoSchedule::geometric(1.1), 1.0, 0, 10) == doctest::Approx(1.1));
  CHECK(update_rho(RhoSchedule::constant(), 3.0, 99, 10) == 3.0);
}

TEST_CASE("objective") {
  Rng rng(2);
  const Matrix w = rng.gaussian(4, 4);
  const LayerProblem p = with_gram(w, Matrix::identity(4), 0.5, SemiStructured{2, 4}, 1);
  const Matrix s = project(w, SemiStructured{2, 4}).values;
  CHECK(objective(p, s, w - s) == 0.0);

  Matrix e(3, 4);
  e(0, 0) = 1;
  e(1, 1) = 1;
  e(2, 3) = -1;
  const LayerProblem q = with_gram(e, Matrix(3, 3), 2.0, SemiStructured{2, 4}, 0);
  CHECK(objective(q, Matrix(3, 4), Matrix(3, 4)) == doctest::Approx(3.0));

  const SyntheticLayer inst = random_layer_problem(8, 8, 20, SemiStructured{2, 4}, 2, 0.3, 5);
  const Matrix s2 = rng.gaussian(8, 8), l2 = rng.gaussian(8, 8);
  const Matrix err = inst.problem.w_hat - s2 - l2;
  const double direct = 0.5 * oracle::fro2(oracle::mul(inst.x, err)) + 0.15 * oracle::fro2(err);
  CHECK(objective(inst.problem, s2, l2) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("feasible point with r = 0 is an ADMM fixed point") {
  const Matrix w = project(Rng(3).gaussian(4, 8), SemiStructured{2, 4}).values;
  Rng rng(4);
  const LayerProblem p = LayerProblem::from_activations(w, rng.gaussian(16, 4), 0.1, SemiStructured{2, 4}, 0);
  const HOperator hop = build_hessian(p, Damping{});
  AdmmState st = init_admm(p, hop, 0.1);
  CHECK(st.s == w);
  CHECK(st.d == w);
  const AdmmState next = admm_step(st, p, hop);
  CHECK(next.iter == st.iter + 1);
  CHECK(oracle::max_abs_diff(next.s, st.s) < 1e-12);
  CHECK(next.l == st.l);
  CHECK(oracle::max_abs_diff(next.d, st.d) < 1e-12);
  CHECK(oracle::max_abs_diff(next.v, st.v) < 1e-11);
  CHECK(next.d_support == st.d_support);
}

TEST_CASE("S-update with H = I and rho = 1") {
  Rng rng(5);
  const HOperator id = HOperator::from_matrix(Matrix::identity(2));
  const Matrix w = rng.gaussian(2, 2), l = rng.gaussian(2, 2), d = rng.gaussian(2, 2), v = rng.gaussian(2, 2);
  const Matrix s = admm_s_update(id, w, l, d, v, 1.0);
  CHECK(oracle::max_abs_diff(s, 0.5 * (w - l - v + d)) < 1e-15);
}

TEST_CASE("each sub-update of a step matches its oracle") {
  Rng rng(6);
  const SyntheticLayer inst = random_layer_problem(6, 8, 30, SemiStructured{2, 4}, 1, 0.1, 7);
  const LayerProblem& p = inst.problem;
  const HOperator hop = build_hessian(p, Damping{});
  AdmmState st = init_admm(p, hop, 0.4);
  st.v = rng.gaussian(6, 8);
  const AdmmState next = admm_step(st, p, hop);
  const Matrix& h = hop.matrix();
  const Matrix rhs = oracle::mul(h, p.w_hat - st.l) - st.v + 0.4 * st.d;
  CHECK(oracle::max_abs_diff(next.s, oracle::solve(h + 0.4 * Matrix::identity(6), rhs)) < 1e-10);
  const Matrix lref = oracle::weighted_fit(h, p.w_hat - next.s, 1);
  CHECK(oracle::weighted_err(h, p.w_hat - next.s - next.l) ==
        doctest::Approx(oracle::weighted_err(h, p.w_hat - next.s - lref)).epsilon(1e-10));
  const Matrix target = next.s + (1.0 / 0.4) * st.v;
  CHECK(next.d == project(target, SemiStructured{2, 4}).values);
  CHECK(oracle::max_abs_diff(next.v, st.v + 0.4 * (next.s - next.d)) < 1e-12);
}

TEST_CASE("with G = I, r = 0 and lambda = 0 the solver returns magnitude pruning") {
  Rng rng(8);
  const Matrix w = rng.gaussian(8, 8);
  const LayerProblem p = LayerProblem::from_activations(w, Matrix::identity(8), 0.0, SemiStructured{2, 4}, 0);
  RunConfig cfg;
  const SolveResult r = solve_3basil(p, cfg);
  CHECK(r.s == project(w, SemiStructured{2, 4}).values);
  CHECK(r.l == Matrix(8, 8));
}

TEST_CASE("keep fraction 1 reaches zero objective") {
  const SyntheticLayer inst = random_layer_problem(8, 8, 32, Unstructured{1.0}, 2, 0.01, 9);
  RunConfig cfg;
  cfg.sparsity = Unstructured{1.0};
  cfg.rank = 2;
  const SolveResult r = solve_3basil(inst.problem, cfg);
  CHECK(r.report.final_objective < 1e-20);
}

TEST_CASE("solver output is feasible and the report is consistent") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticLayer inst = random_layer_problem(16, 16, 64, SemiStructured{2, 4}, 2, 0.01, seed);
    RunConfig cfg;
    cfg.rank = 2;
    const SolveResult r = solve_3basil(inst.problem, cfg);
    CHECK(satisfies_pattern(r.s, SemiStructured{2, 4}));
    CHECK(numerical_rank(r.l) <= 2);
    CHECK(r.report.records.size() <= cfg.max_iters);
    CHECK(r.report.final_objective <= r.report.initial_objective);
    CHECK(r.report.final_objective == doctest::Approx(objective(inst.problem, r.s, r.l)).epsilon(1e-12));
    for (std::size_t i = 1; i < r.report.records.size(); ++i) {
      CHECK(r.report.records[i].rho >= r.report.records[i - 1].rho);
      CHECK(r.report.records[i].wall_ms == 0.0);
    }
    CHECK(r.report.metadata.contains("rsvd_seed_policy"));
  }
}

TEST_CASE("primal residual trends down under the step-function schedule") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticLayer inst = random_layer_problem(16, 16, 64, SemiStructured{2, 4}, 2, 0.01, 100 + seed);
    RunConfig cfg;
    cfg.rank = 2;
    cfg.tol_abs = cfg.tol_rel = 0.0;
    const SolveResult r = solve_3basil(inst.problem, cfg);
    std::vector<double> med;
    for (std::size_t w = 0; w + 50 <= r.report.records.size(); w += 50) {
      std::vector<double> win;
      for (std::size_t i = w; i < w + 50; ++i) win.push_back(r.report.records[i].primal_residual);
      med.push_back(median(win));
    }
    REQUIRE(med.size() >= 2);
    CHECK(med.back() < med.front());
  }
}

TEST_CASE("3BASiL beats AltMin-lite on most random 16x16 instances") {
  std::size_t wins = 0;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticLayer inst = random_layer_problem(16, 16, 64, SemiStructured{2, 4}, 2, 0.01, 500 + seed);
    RunConfig cfg;
    cfg.rank = 2;
    const double ours = solve_3basil(inst.problem, cfg).report.final_objective;
    const double alt = alt_min(inst.problem, altmin_config_from(cfg, 16, 16)).report.final_objective;
    wins += ours <= alt;
    ratio.push_back(ours / alt);
  }
  CHECK(wins >= 12);
  CHECK(median(ratio) <= 1.0);
}

TEST_CASE("randomized low-rank mode is reproducible") {
  const SyntheticLayer inst = random_layer_problem(16, 24, 64, SemiStructured{2, 4}, 3, 0.01, 77);
  RunConfig cfg;
  cfg.rank = 3;
  cfg.low_rank = LowRankChoice::randomized;
  cfg.max_iters = 30;
  cfg.seed = 5;
  const SolveResult a = solve_3basil(inst.problem, cfg);
  const SolveResult b = solve_3basil(inst.problem, cfg);
  CHECK(a.s == b.s);
  CHECK(a.l == b.l);
  CHECK(a.report.metadata["low_rank_mode"] == "randomized");
}

TEST_CASE("problem validation") {
  Rng rng(10);
  Matrix w = rng.gaussian(4, 4);
  CHECK_THROWS_AS(with_gram(w, Matrix(3, 3), 0.0, SemiStructured{2, 4}, 0).validate(), Error);
  CHECK_THROWS_AS(with_gram(w, Matrix{{1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}, 0.0,
                            SemiStructured{2, 4}, 0)
                      .validate(),
                  Error);
  CHECK_THROWS_AS(with_gram(w, Matrix::identity(4), 0.0, SemiStructured{2, 4}, 5).validate(), Error);
  w(0, 0) = std::numeric_limits<double>::infinity();
  try {
    with_gram(w, Matrix::identity(4), 0.0, SemiStructured{2, 4}, 0).validate();
    FAIL("expected numerical error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::numerical);
  }
}

TEST_CASE("accumulate_gram sums blocks") {
  Rng rng(11);
  const Matrix a = rng.gaussian(5, 3), b = rng.gaussian(7, 3);
  const std::vector<Matrix> blocks = {a, b};
  const Matrix g = accumulate_gram(blocks);
  const Matrix ref = oracle::mul(oracle::tr(a), a) + oracle::mul(oracle::tr(b), b);
  CHECK(oracle::max_abs_diff(g, ref) < 1e-12);
}
