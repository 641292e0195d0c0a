// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run reports serialize as JSON lines: one {"type":"iter",...} object per
// iteration followed by one {"type":"final",...} summary object.
//
//   iter:  method, iter, objective, primal_residual, rho, support_change,
//          schedule_change (only on rho-schedule iterations), surrogate
//          (OATS only), wall_ms
//   final: method, label, initial_objective, final_objective, rank,
//          sparsity, iterations, metadata

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace slr {

struct IterationRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double rho = 0.0;
  std::size_t support_change = 0;
  std::optional<std::size_t> schedule_change;
  std::optional<double> surrogate;
  double wall_ms = 0.0;
};

struct RunReport {
  std::string method;
  std::string label;
  std::vector<IterationRecord> records;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::size_t final_rank = 0;
  double final_sparsity = 0.0;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json iteration_json(const IterationRecord& r) const;
  nlohmann::json summary_json() const;
  void write_jsonl(std::ostream& out) const;
  static RunReport parse_jsonl(std::istream& in);
};

}  // namespace slr
