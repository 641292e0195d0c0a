// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration. The on-disk form is flat UTF-8 `key = value` text with
// `#` comments and an optional `[tm]` section; see docs in README.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "slr/linalg.hpp"
#include "slr/sparsity.hpp"

namespace slr {

enum class Method { three_basil, alt_min, oats, eora };
enum class PruneWeighting { hessian_lite, diag_only };
enum class LowRankChoice { automatic, exact, randomized };

std::string_view method_name(Method m);
Method parse_method(std::string_view text);

// H' = H + diag_coeff * diag(X^T X) + trace_coeff * tr(X^T X) * I
struct Damping {
  bool enabled = true;
  double diag_coeff = 0.005;
  double trace_coeff = 0.005;
};

struct RhoSchedule {
  enum class Kind { step_function, geometric, constant };
  Kind kind = Kind::step_function;
  std::size_t period = 10;
  double factor = 1.1;  // geometric growth per iteration

  static RhoSchedule step_function() { return {}; }
  static RhoSchedule geometric(double gamma) { return {Kind::geometric, 1, gamma}; }
  static RhoSchedule constant() { return {Kind::constant, 1, 1.0}; }
};

struct TmHyper {
  std::size_t epochs = 20;
  std::size_t batch = 8;
  double lr = 2e-5;
  double eta_min = 4e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool train_norms = false;

  void validate() const;
};

struct RunConfig {
  SparsityPattern sparsity = SemiStructured{2, 4};
  std::size_t rank = 0;
  double lambda = 0.01;
  double rho0 = 0.1;
  std::size_t max_iters = 200;
  std::uint64_t seed = 0;
  Damping damping;
  Method method = Method::three_basil;
  std::size_t steps = 80;  // alternating steps for AltMin / OATS
  PruneWeighting prune_weighting = PruneWeighting::hessian_lite;
  RhoSchedule schedule;
  double rho_cap = 1e8;
  double tol_abs = 1e-7;
  double tol_rel = 1e-6;
  bool normalize_hessian = true;
  LowRankChoice low_rank = LowRankChoice::automatic;
  std::size_t rsvd_oversample = 10;
  std::size_t rsvd_power_iters = 2;
  bool record_timing = false;
  std::optional<TmHyper> tm;

  void validate() const;
  void validate_for_shape(std::size_t rows, std::size_t cols) const;
  // Exact below dimension 256 in automatic mode.
  LowRankMode low_rank_mode_for(std::size_t rows, std::size_t cols) const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& cfg);

}  // namespace slr
