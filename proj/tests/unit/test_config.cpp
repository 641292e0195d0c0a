// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "slr/config.hpp"
#include "slr/error.hpp"

using namespace slr;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return std::string(errc_name(e.code())) + ": " + e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const RunConfig cfg = parse_config("sparsity = 2:4\nrank = 4\n");
  CHECK(cfg.sparsity == SparsityPattern(SemiStructured{2, 4}));
  CHECK(cfg.rank == 4);
  CHECK(cfg.rho0 == 0.1);
  CHECK(cfg.lambda == 0.01);
  CHECK(cfg.max_iters == 200);
  CHECK(cfg.steps == 80);
  CHECK(cfg.damping.enabled);
  CHECK(cfg.damping.diag_coeff == 0.005);
  CHECK(cfg.damping.trace_coeff == 0.005);
  CHECK_FALSE(cfg.tm.has_value());
}

TEST_CASE("N must be smaller than M") {
  const std::string msg = message_of("sparsity = 4:4\n");
  CHECK(msg.find("invariant") != std::string::npos);
  CHECK(msg.find("sparsity") != std::string::npos);
}

TEST_CASE("rank is validated against the matrix shape") {
  const RunConfig cfg = parse_config("rank = 9\n");
  CHECK_NOTHROW(cfg.validate_for_shape(9, 16));
  try {
    cfg.validate_for_shape(8, 16);
    FAIL("expected invariant violation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invariant);
    CHECK(std::string(e.what()).find("rank") != std::string::npos);
  }
}

TEST_CASE("M must divide the row length") {
  const RunConfig cfg = parse_config("sparsity = 2:4\n");
  CHECK_THROWS_AS(cfg.validate_for_shape(8, 6), Error);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(message_of("rank = 1\n# comment\nthis is not valid\n").find("line 3") != std::string::npos);
  CHECK(message_of("rank = 1\nunknown_key = 3\n").find("line 2") != std::string::npos);
  CHECK(message_of("rank = -1\n").rfind("parse", 0) == 0);
  CHECK(message_of("[nope]\n").find("line 1") != std::string::npos);
}

TEST_CASE("tm section enables refinement") {
  const RunConfig cfg = parse_config("rank = 2\n[tm]\nepochs = 3\nlr = 1e-4\ntrain_norms = true\n");
  REQUIRE(cfg.tm.has_value());
  CHECK(cfg.tm->epochs == 3);
  CHECK(cfg.tm->lr == 1e-4);
  CHECK(cfg.tm->eta_min == 4e-6);
  CHECK(cfg.tm->batch == 8);
  CHECK(cfg.tm->train_norms);
  CHECK_THROWS_AS(parse_config("[tm]\neta_min = 1\nlr = 0.5\n"), Error);
}

TEST_CASE("format_config round-trips") {
  RunConfig cfg = parse_config(
      "sparsity = 0.3\nrank = 3\nlambda = 0.25\nmethod = oats\nschedule = geometric\nseed = 42\n"
      "prune_weighting = diag\nlow_rank = randomized\n[tm]\nbatch = 4\n");
  const RunConfig again = parse_config(format_config(cfg));
  CHECK(format_config(again) == format_config(cfg));
  CHECK(again.method == Method::oats);
  CHECK(again.seed == 42);
  CHECK(again.low_rank == LowRankChoice::randomized);
  CHECK(again.tm->batch == 4);
}

TEST_CASE("method names") {
  CHECK(method_name(Method::three_basil) == "3basil");
  CHECK(parse_method("altmin-lite") == Method::alt_min);
  CHECK(parse_method("eora") == Method::eora);
  CHECK_THROWS_AS(parse_method("sparsegpt"), Error);
}
