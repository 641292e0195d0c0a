// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/report.hpp"

#include <istream>
#include <ostream>

#include "slr/error.hpp"

namespace slr {

nlohmann::json RunReport::iteration_json(const IterationRecord& r) const {
  nlohmann::json j = {{"type", "iter"},
                      {"method", method},
                      {"iter", r.iter},
                      {"objective", r.objective},
                      {"primal_residual", r.primal_residual},
                      {"rho", r.rho},
                      {"support_change", r.support_change},
                      {"wall_ms", r.wall_ms}};
  if (r.schedule_change) j["schedule_change"] = *r.schedule_change;
  if (r.surrogate) j["surrogate"] = *r.surrogate;
  return j;
}

nlohmann::json RunReport::summary_json() const {
  return {{"type", "final"},
          {"method", method},
          {"label", label},
          {"initial_objective", initial_objective},
          {"final_objective", final_objective},
          {"rank", final_rank},
          {"sparsity", final_sparsity},
          {"iterations", records.size()},
          {"metadata", metadata}};
}

void RunReport::write_jsonl(std::ostream& out) const {
  for (const IterationRecord& r : records) out << iteration_json(r).dump() << '\n';
  out << summary_json().dump() << '\n';
}

RunReport RunReport::parse_jsonl(std::istream& in) {
  RunReport report;
  std::string line;
  bool saw_final = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse, std::string("report line is not JSON: ") + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "iter") {
      IterationRecord r;
      r.iter = j.at("iter").get<std::size_t>();
      r.objective = j.at("objective").get<double>();
      r.primal_residual = j.at("primal_residual").get<double>();
      r.rho = j.at("rho").get<double>();
      r.support_change = j.at("support_change").get<std::size_t>();
      r.wall_ms = j.at("wall_ms").get<double>();
      if (j.contains("schedule_change")) r.schedule_change = j["schedule_change"].get<std::size_t>();
      if (j.contains("surrogate")) r.surrogate = j["surrogate"].get<double>();
      report.method = j.at("method").get<std::string>();
      report.records.push_back(r);
    } else if (type == "final") {
      report.method = j.at("method").get<std::string>();
      report.label = j.value("label", "");
      report.initial_objective = j.at("initial_objective").get<double>();
      report.final_objective = j.at("final_objective").get<double>();
      report.final_rank = j.at("rank").get<std::size_t>();
      report.final_sparsity = j.at("sparsity").get<double>();
      report.metadata = j.value("metadata", nlohmann::json::object());
      saw_final = true;
    } else {
      fail(Errc::parse, "unknown report record type '" + type + "'");
    }
  }
  if (!saw_final) fail(Errc::parse, "report has no final summary record");
  return report;
}

}  // namespace slr
