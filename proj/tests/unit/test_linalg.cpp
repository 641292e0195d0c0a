// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "slr/error.hpp"
#include "slr/linalg.hpp"
#include "slr/rng.hpp"

using namespace slr;

namespace {

Matrix spd(std::size_t n, Rng& rng) {
  const Matrix a = rng.gaussian(n, n);
  Matrix h = oracle::mul(oracle::tr(a), a);
  for (std::size_t i = 0; i < n; ++i) h(i, i) += 0.5;
  return h;
}

double fro(const Matrix& a) { return std::sqrt(oracle::fro2(a)); }

bool orthonormal_columns(const Matrix& q, double tol) {
  const Matrix g = oracle::mul(oracle::tr(q), q);
  return fro(g - Matrix::identity(q.cols())) <= tol;
}

}  // namespace

TEST_CASE("sym_eig on diagonal and 2x2 matrices") {
  const SymEig a = sym_eig(Matrix{{2, 0}, {0, 5}});
  CHECK(a.values[0] == doctest::Approx(2.0));
  CHECK(a.values[1] == doctest::Approx(5.0));
  CHECK(std::abs(a.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(a.vectors(1, 1)) == doctest::Approx(1.0));

  const SymEig b = sym_eig(Matrix{{2, 1}, {1, 2}});
  CHECK(b.values[0] == doctest::Approx(1.0));
  CHECK(b.values[1] == doctest::Approx(3.0));
}

TEST_CASE("sym_eig reconstructs random SPD matrices") {
  Rng rng(2);
  for (std::size_t n : {1u, 5u, 16u, 33u}) {
    const Matrix h = spd(n, rng);
    const SymEig e = sym_eig(h);
    CHECK(orthonormal_columns(e.vectors, 1e-8 * std::sqrt(double(n))));
    const Matrix rec = oracle::mul(scale_cols(e.vectors, e.values), oracle::tr(e.vectors));
    CHECK(fro(rec - h) <= 1e-10 * fro(h));
    for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
  }
}

TEST_CASE("sym_eig rejects non-symmetric input") {
  try {
    sym_eig(Matrix{{1, 2}, {0, 1}});
    FAIL("expected not_symmetric");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_symmetric);
  }
}

TEST_CASE("HOperator factors") {
  Rng rng(4);
  const Matrix h = spd(7, rng);
  const HOperator hop = HOperator::from_matrix(h);
  CHECK(fro(oracle::mul(hop.inv_sqrt_factor(), hop.sqrt_factor()) - Matrix::identity(7)) <= 1e-8);
  CHECK(fro(oracle::mul(oracle::tr(hop.sqrt_factor()), hop.sqrt_factor()) - h) <= 1e-10 * fro(h));
  const HOperator scaled = hop.scaled(3.0);
  CHECK(fro(scaled.matrix() - 3.0 * h) <= 1e-12 * fro(h));
  CHECK_THROWS_AS(HOperator::from_matrix(Matrix{{1, 0}, {0, -1}}), Error);
}

TEST_CASE("shifted_inverse_apply") {
  const HOperator id = HOperator::from_matrix(Matrix::identity(3));
  const Matrix b{{1, 2}, {3, 4}, {5, 6}};
  CHECK(oracle::max_abs_diff(shifted_inverse_apply(id, 1.0, b), 0.5 * b) < 1e-15);

  const HOperator d = HOperator::from_matrix(Matrix{{1, 0}, {0, 3}});
  const Matrix out = shifted_inverse_apply(d, 1.0, Matrix::identity(2));
  CHECK(out(0, 0) == doctest::Approx(0.5));
  CHECK(out(1, 1) == doctest::Approx(0.25));
  CHECK(std::abs(out(0, 1)) < 1e-15);

  Rng rng(8);
  const Matrix h = spd(8, rng);
  const Matrix rhs = rng.gaussian(8, 5);
  const Matrix x = shifted_inverse_apply(HOperator::from_matrix(h), 0.7, rhs);
  const Matrix shifted = h + 0.7 * Matrix::identity(8);
  CHECK(fro(oracle::mul(shifted, x) - rhs) <= 1e-8 * fro(rhs));
  CHECK(oracle::max_abs_diff(x, oracle::solve(shifted, rhs)) < 1e-10);
}

TEST_CASE("randomized_svd on analytic cases") {
  const Matrix a = Matrix{{5, 0, 0}, {0, 1, 0}, {0, 0, 0}};
  const TruncatedSvd s = randomized_svd(a, 1);
  CHECK(s.sigma[0] == doctest::Approx(5.0));
  CHECK(fro(a - s.reconstruct()) == doctest::Approx(1.0));

  Rng rng(3);
  const Matrix low = oracle::mul(rng.gaussian(20, 2), rng.gaussian(2, 15));
  CHECK(fro(low - randomized_svd(low, 2).reconstruct()) < 1e-8);
}

TEST_CASE("randomized_svd is within 5% of the exact truncation") {
  Rng rng(12);
  for (int i = 0; i < 5; ++i) {
    const Matrix a = rng.gaussian(64, 48);
    const TruncatedSvd s = randomized_svd(a, 8, RsvdOptions{10, 2, rng.next()});
    CHECK(orthonormal_columns(s.u, 1e-8));
    CHECK(orthonormal_columns(s.v, 1e-8));
    const double best = fro(a - oracle::truncate(a, 8));
    CHECK(fro(a - s.reconstruct()) <= 1.05 * best);
  }
  CHECK_THROWS_AS(randomized_svd(Matrix(3, 2), 3), Error);
}

TEST_CASE("randomized_svd is deterministic in the seed") {
  Rng rng(1);
  const Matrix a = rng.gaussian(30, 20);
  const TruncatedSvd x = randomized_svd(a, 4, RsvdOptions{10, 2, 99});
  const TruncatedSvd y = randomized_svd(a, 4, RsvdOptions{10, 2, 99});
  CHECK(x.u == y.u);
  CHECK(x.v == y.v);
  CHECK(x.sigma == y.sigma);
}

TEST_CASE("exact_svd fixes signs and matches the oracle spectrum") {
  Rng rng(6);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{9, 5}, {5, 9}, {6, 6}}) {
    const Matrix a = rng.gaussian(m, n);
    const TruncatedSvd s = exact_svd(a, 3);
    const oracle::Svd ref = oracle::jacobi_svd(a);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(s.sigma[k] == doctest::Approx(ref.sigma[k]).epsilon(1e-10));
      std::size_t first = 0;
      while (first < n && std::abs(s.v(first, k)) < 1e-14) ++first;
      CHECK(s.v(first, k) > 0.0);
    }
  }
}

TEST_CASE("rank_r_project") {
  const Matrix p = rank_r_project(Matrix{{3, 0}, {0, 1}}, 1);
  CHECK(oracle::max_abs_diff(p, Matrix{{3, 0}, {0, 0}}) < 1e-14);

  Rng rng(10);
  const Matrix a = rng.gaussian(6, 4);
  CHECK(rank_r_project(a, 4) == a);
  CHECK(rank_r_project(a, 0) == Matrix(6, 4));

  // Beats random rank-3 candidates.
  const Matrix b = rng.gaussian(10, 10);
  const double best = fro(b - rank_r_project(b, 3));
  for (int i = 0; i < 1000; ++i) {
    const Matrix cand = oracle::mul(rng.gaussian(10, 3), rng.gaussian(3, 10));
    CHECK(best <= fro(b - cand) + 1e-12);
  }
}

TEST_CASE("rank_r_project equals greedy rank-1 deflation in the Frobenius norm") {
  Rng rng(13);
  const Matrix a = rng.gaussian(8, 7);
  Matrix rest = a, greedy(8, 7);
  for (int k = 0; k < 3; ++k) {
    const Matrix one = oracle::truncate(rest, 1);
    greedy += one;
    rest -= one;
  }
  CHECK(oracle::max_abs_diff(rank_r_project(a, 3), greedy) < 1e-10);
}

TEST_CASE("rank_r_weighted_fit") {
  Rng rng(14);
  const Matrix r = rng.gaussian(6, 5);
  const HOperator id = HOperator::from_matrix(Matrix::identity(6));
  CHECK(oracle::max_abs_diff(rank_r_weighted_fit(id, r, 2), rank_r_project(r, 2)) < 1e-12);
  CHECK(rank_r_weighted_fit(id, r, 0) == Matrix(6, 5));

  const Matrix h = spd(8, rng);
  const Matrix res = rng.gaussian(8, 6);
  const Matrix l = rank_r_weighted_fit(HOperator::from_matrix(h), res, 2);
  CHECK(numerical_rank(l) <= 2);
  const double closed = oracle::weighted_err(h, res - l);
  const double pgd = oracle::factored_descent(h, res, 2, 5000, 1);
  CHECK(closed <= pgd * (1.0 + 1e-6));
  CHECK(oracle::max_abs_diff(l, oracle::weighted_fit(h, res, 2)) < 1e-8);
}

TEST_CASE("weighted fit beats random rank-r candidates") {
  Rng rng(15);
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = 2 + rng.next() % 7, m = 2 + rng.next() % 7;
    const std::size_t r = 1 + rng.next() % std::min<std::size_t>(3, std::min(n, m));
    const Matrix h = spd(n, rng);
    const Matrix res = rng.gaussian(n, m);
    const double best = std::sqrt(oracle::weighted_err(h, res - rank_r_weighted_fit(HOperator::from_matrix(h), res, r)));
    for (int i = 0; i < 1000; ++i) {
      const Matrix cand = oracle::mul(rng.gaussian(n, r), rng.gaussian(r, m));
      CHECK(best <= std::sqrt(oracle::weighted_err(h, res - cand)) + 1e-9);
    }
  }
}

TEST_CASE("randomized weighted fit stays close to exact") {
  Rng rng(16);
  const Matrix h = spd(20, rng);
  const Matrix res = rng.gaussian(20, 30);
  const HOperator hop = HOperator::from_matrix(h);
  const double ex = oracle::weighted_err(h, res - rank_r_weighted_fit(hop, res, 4));
  const double rz = oracle::weighted_err(h, res - rank_r_weighted_fit(hop, res, 4, LowRankMode::randomized, {10, 2, 3}));
  CHECK(rz <= 1.05 * 1.05 * ex);
}

TEST_CASE("orthonormalize and numerical_rank") {
  Rng rng(17);
  const Matrix y = rng.gaussian(12, 5);
  const Matrix q = orthonormalize(y);
  CHECK(orthonormal_columns(q, 1e-12));
  // Q spans Y: projecting Y onto Q reproduces Y.
  CHECK(fro(oracle::mul(q, oracle::mul(oracle::tr(q), y)) - y) < 1e-10);
  CHECK(numerical_rank(oracle::mul(rng.gaussian(9, 3), rng.gaussian(3, 7))) == 3);
  CHECK(numerical_rank(Matrix(4, 4)) == 0);
  CHECK(numerical_rank(Matrix::identity(5)) == 5);
}
