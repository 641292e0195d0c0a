// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "../oracles.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"
#include "slr/sparsity.hpp"

using namespace slr;

TEST_CASE("2:4 keeps the two largest magnitudes") {
  const Projection p = project(Matrix{{3, -1, 4, 2}}, SemiStructured{2, 4});
  CHECK(p.values == Matrix{{3, 0, 4, 0}});
  CHECK(p.support.popcount() == 2);
}

TEST_CASE("ties go to the lowest index") {
  CHECK(project(Matrix{{1, 1, 1, 1}}, SemiStructured{2, 4}).values == Matrix{{1, 1, 0, 0}});
  const Projection z = project(Matrix{{0, 0, 0, 0, 5, 0, 0, 0}}, SemiStructured{2, 4});
  CHECK(z.support.popcount() == 4);
  CHECK(z.support.contains(0, 0));
  CHECK(z.support.contains(0, 1));
  CHECK(z.support.contains(0, 4));
  CHECK(z.support.contains(0, 5));
}

TEST_CASE("unstructured projection matches a full sort") {
  Rng rng(1);
  const Matrix a = rng.gaussian(8, 8);
  const Projection p = project(a, Unstructured{0.5});
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return a.values()[x] * a.values()[x] > a.values()[y] * a.values()[y];
  });
  for (std::size_t r = 0; r < 64; ++r) CHECK(p.support.contains_flat(idx[r]) == (r < 32));
}

TEST_CASE("keep counts use round-half-to-even") {
  CHECK(SparsityPattern(Unstructured{0.5}).keep_count(1, 5) == 2);
  CHECK(SparsityPattern(Unstructured{0.5}).keep_count(1, 7) == 4);
  CHECK(SparsityPattern(Unstructured{0.5}).keep_count(1, 9) == 4);
  CHECK(SparsityPattern(SemiStructured{2, 4}).keep_count(3, 8) == 12);
}

TEST_CASE("pattern validation") {
  CHECK_THROWS_AS(SparsityPattern(SemiStructured{4, 4}), Error);
  CHECK_THROWS_AS(SparsityPattern(SemiStructured{0, 4}), Error);
  CHECK_THROWS_AS(SparsityPattern(Unstructured{0.0}), Error);
  CHECK_THROWS_AS(SparsityPattern(Unstructured{1.5}), Error);
  CHECK_THROWS_AS(project(Matrix(2, 6), SemiStructured{2, 4}), Error);
  CHECK_THROWS_AS(project(Matrix(1, 4), SemiStructured{2, 4}, Matrix{{1, 0, 1, 1}}), Error);
  CHECK(SparsityPattern::parse("2:4") == SparsityPattern(SemiStructured{2, 4}));
  CHECK(SparsityPattern::parse("0.25") == SparsityPattern(Unstructured{0.25}));
  CHECK(SparsityPattern::parse("unstructured:0.5") == SparsityPattern(Unstructured{0.5}));
  CHECK(SparsityPattern::parse(SparsityPattern(SemiStructured{4, 8}).to_string()) ==
        SparsityPattern(SemiStructured{4, 8}));
  CHECK_THROWS_AS(SparsityPattern::parse("2-4"), Error);
}

TEST_CASE("weights broadcast by row and by column") {
  const Matrix a{{1, 2, 3, 4}, {4, 3, 2, 1}};
  const Projection by_col = project(a, SemiStructured{2, 4}, Matrix{{10, 10, 1, 1}});
  CHECK(by_col.values == Matrix{{1, 2, 0, 0}, {4, 3, 0, 0}});
  const Projection by_row = project(a, Unstructured{0.5}, Matrix{{1}, {100}});
  CHECK(by_row.values == Matrix{{0, 0, 0, 0}, {4, 3, 2, 1}});
  const Matrix full{{1, 1, 1, 1}, {1, 1, 1, 1}};
  CHECK(project(a, SemiStructured{2, 4}, full).values == project(a, SemiStructured{2, 4}).values);
}

TEST_CASE("N:M projection is the exhaustive optimum per group") {
  Rng rng(2);
  for (std::size_t m = 2; m <= 8; ++m)
    for (std::size_t n = 1; n < m; ++n)
      for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = rng.gaussian(1, 3 * m);
        const Matrix w = rng.gaussian(1, 3 * m);
        Matrix pos(1, 3 * m);
        for (std::size_t i = 0; i < pos.size(); ++i) pos.values()[i] = 0.1 + std::abs(w.values()[i]);
        const Projection p = project(a, SemiStructured{n, m}, pos);
        std::vector<double> scores(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double s = pos.values()[i] * a.values()[i];
          scores[i] = s * s;
        }
        const std::vector<bool> keep = oracle::exhaustive_nm(scores, n, m);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(p.support.contains_flat(i) == keep[i]);
      }
}

TEST_CASE("projection is idempotent and scale covariant") {
  Rng rng(3);
  for (const SparsityPattern& pat : {SparsityPattern(SemiStructured{2, 4}), SparsityPattern(Unstructured{0.3})}) {
    const Matrix a = rng.gaussian(6, 8);
    const Projection p = project(a, pat);
    const Projection pp = project(p.values, pat);
    CHECK(pp.values == p.values);
    CHECK(pp.support == p.support);
    const Projection scaled = project(2.5 * a, pat);
    CHECK(scaled.support == p.support);
    CHECK(oracle::max_abs_diff(scaled.values, 2.5 * p.values) == 0.0);
    CHECK(satisfies_pattern(p.values, pat));
  }
  CHECK_FALSE(satisfies_pattern(Matrix{{1, 1, 1, 0}}, SemiStructured{2, 4}));
}

TEST_CASE("apply_support") {
  Rng rng(4);
  const Matrix a = rng.gaussian(4, 4);
  CHECK(apply_support(a, Support(4, 4, true)) == a);
  CHECK(apply_support(a, Support(4, 4, false)) == Matrix(4, 4));
  Support s(4, 4);
  for (std::size_t i = 0; i < 16; ++i) s.set_flat(i, rng.next() % 2);
  const Matrix out = apply_support(a, s);
  for (std::size_t i = 0; i < 16; ++i) CHECK(out.values()[i] == (s.contains_flat(i) ? a.values()[i] : 0.0));
  CHECK_THROWS_AS(apply_support(a, Support(3, 4)), Error);
}

TEST_CASE("support symmetric difference") {
  CHECK(support_symmetric_difference(Support(4, 4, true), Support(4, 4, true)) == 0);
  CHECK(support_symmetric_difference(Support(4, 4, true), Support(4, 4, false)) == 16);
  Rng rng(5);
  Support a(5, 7), b(5, 7);
  std::size_t expect = 0;
  for (std::size_t i = 0; i < 35; ++i) {
    const bool x = rng.next() % 2, y = rng.next() % 2;
    a.set_flat(i, x);
    b.set_flat(i, y);
    expect += x != y;
  }
  CHECK(support_symmetric_difference(a, b) == expect);
  CHECK_THROWS_AS(support_symmetric_difference(a, Support(7, 5)), Error);
}
