// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "slr/error.hpp"

namespace slr {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct LineError {
  std::string message;
};

double to_double(const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    throw LineError{"expected a number, got '" + v + "'"};
  }
  if (used != v.size()) throw LineError{"expected a number, got '" + v + "'"};
  return x;
}

std::uint64_t to_uint(const std::string& v) {
  if (v.empty() || v[0] == '-') throw LineError{"expected a non-negative integer, got '" + v + "'"};
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::logic_error&) {
    throw LineError{"expected a non-negative integer, got '" + v + "'"};
  }
  if (used != v.size()) throw LineError{"expected a non-negative integer, got '" + v + "'"};
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw LineError{"expected a boolean, got '" + v + "'"};
}

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) fail(Errc::invariant, std::string("config field '") + field + "': " + why);
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::three_basil: return "3basil";
    case Method::alt_min: return "altmin-lite";
    case Method::oats: return "oats";
    case Method::eora: return "eora";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "3basil") return Method::three_basil;
  if (text == "altmin" || text == "altmin-lite") return Method::alt_min;
  if (text == "oats") return Method::oats;
  if (text == "eora") return Method::eora;
  fail(Errc::parse, "unknown method '" + std::string(text) + "'");
}

void TmHyper::validate() const {
  require(epochs > 0, "tm.epochs", "must be positive");
  require(batch > 0, "tm.batch", "must be positive");
  require(lr > 0.0, "tm.lr", "must be positive");
  require(eta_min > 0.0 && eta_min <= lr, "tm.eta_min", "must satisfy 0 < eta_min <= lr");
  require(beta1 > 0.0 && beta1 < 1.0, "tm.beta1", "must lie in (0, 1)");
  require(beta2 > 0.0 && beta2 < 1.0, "tm.beta2", "must lie in (0, 1)");
  require(eps > 0.0, "tm.eps", "must be positive");
}

void RunConfig::validate() const {
  require(lambda >= 0.0, "lambda", "must be non-negative");
  require(rho0 > 0.0, "rho0", "must be positive");
  require(max_iters > 0, "max_iters", "must be positive");
  require(steps > 0, "steps", "must be positive");
  require(rho_cap >= rho0, "rho_cap", "must be at least rho0");
  require(tol_abs >= 0.0 && tol_rel >= 0.0, "tol", "tolerances must be non-negative");
  require(damping.diag_coeff >= 0.0 && damping.trace_coeff >= 0.0, "damping", "coefficients must be non-negative");
  if (schedule.kind == RhoSchedule::Kind::geometric) require(schedule.factor > 1.0, "schedule_factor", "must exceed 1");
  if (schedule.kind == RhoSchedule::Kind::step_function) require(schedule.period > 0, "schedule_period", "must be positive");
  if (tm) tm->validate();
}

void RunConfig::validate_for_shape(std::size_t rows, std::size_t cols) const {
  validate();
  require(rank <= std::min(rows, cols), "rank",
          std::to_string(rank) + " exceeds min(dims) = " + std::to_string(std::min(rows, cols)));
  try {
    sparsity.validate(rows, cols);
  } catch (const Error& e) {
    require(false, "sparsity", e.what());
  }
}

LowRankMode RunConfig::low_rank_mode_for(std::size_t rows, std::size_t cols) const {
  switch (low_rank) {
    case LowRankChoice::exact: return LowRankMode::exact;
    case LowRankChoice::randomized: return LowRankMode::randomized;
    case LowRankChoice::automatic: break;
  }
  return std::max(rows, cols) < 256 ? LowRankMode::exact : LowRankMode::randomized;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> top{
      {"sparsity", [&](const std::string& v) { cfg.sparsity = SparsityPattern::parse(v); }},
      {"rank", [&](const std::string& v) { cfg.rank = to_uint(v); }},
      {"lambda", [&](const std::string& v) { cfg.lambda = to_double(v); }},
      {"rho0", [&](const std::string& v) { cfg.rho0 = to_double(v); }},
      {"max_iters", [&](const std::string& v) { cfg.max_iters = to_uint(v); }},
      {"seed", [&](const std::string& v) { cfg.seed = to_uint(v); }},
      {"method", [&](const std::string& v) { cfg.method = parse_method(v); }},
      {"steps", [&](const std::string& v) { cfg.steps = to_uint(v); }},
      {"prune_weighting",
       [&](const std::string& v) {
         if (v == "hessian") {
           cfg.prune_weighting = PruneWeighting::hessian_lite;
         } else if (v == "diag") {
           cfg.prune_weighting = PruneWeighting::diag_only;
         } else {
           throw LineError{"prune_weighting must be 'hessian' or 'diag'"};
         }
       }},
      {"damping", [&](const std::string& v) { cfg.damping.enabled = to_bool(v); }},
      {"damping_diag", [&](const std::string& v) { cfg.damping.diag_coeff = to_double(v); }},
      {"damping_trace", [&](const std::string& v) { cfg.damping.trace_coeff = to_double(v); }},
      {"schedule",
       [&](const std::string& v) {
         if (v == "step") {
           cfg.schedule.kind = RhoSchedule::Kind::step_function;
         } else if (v == "geometric") {
           cfg.schedule.kind = RhoSchedule::Kind::geometric;
         } else if (v == "constant") {
           cfg.schedule.kind = RhoSchedule::Kind::constant;
         } else {
           throw LineError{"schedule must be step, geometric or constant"};
         }
       }},
      {"schedule_factor", [&](const std::string& v) { cfg.schedule.factor = to_double(v); }},
      {"schedule_period", [&](const std::string& v) { cfg.schedule.period = to_uint(v); }},
      {"rho_cap", [&](const std::string& v) { cfg.rho_cap = to_double(v); }},
      {"tol_abs", [&](const std::string& v) { cfg.tol_abs = to_double(v); }},
      {"tol_rel", [&](const std::string& v) { cfg.tol_rel = to_double(v); }},
      {"normalize_hessian", [&](const std::string& v) { cfg.normalize_hessian = to_bool(v); }},
      {"low_rank",
       [&](const std::string& v) {
         if (v == "auto") {
           cfg.low_rank = LowRankChoice::automatic;
         } else if (v == "exact") {
           cfg.low_rank = LowRankChoice::exact;
         } else if (v == "randomized") {
           cfg.low_rank = LowRankChoice::randomized;
         } else {
           throw LineError{"low_rank must be auto, exact or randomized"};
         }
       }},
      {"rsvd_oversample", [&](const std::string& v) { cfg.rsvd_oversample = to_uint(v); }},
      {"rsvd_power_iters", [&](const std::string& v) { cfg.rsvd_power_iters = to_uint(v); }},
      {"timing", [&](const std::string& v) { cfg.record_timing = to_bool(v); }},
  };
  TmHyper tm;
  bool tm_enabled = false;
  const std::map<std::string, Setter> tm_keys{
      {"enabled", [&](const std::string& v) { tm_enabled = to_bool(v); }},
      {"epochs", [&](const std::string& v) { tm.epochs = to_uint(v); }},
      {"batch", [&](const std::string& v) { tm.batch = to_uint(v); }},
      {"lr", [&](const std::string& v) { tm.lr = to_double(v); }},
      {"eta_min", [&](const std::string& v) { tm.eta_min = to_double(v); }},
      {"beta1", [&](const std::string& v) { tm.beta1 = to_double(v); }},
      {"beta2", [&](const std::string& v) { tm.beta2 = to_double(v); }},
      {"eps", [&](const std::string& v) { tm.eps = to_double(v); }},
      {"train_norms", [&](const std::string& v) { tm.train_norms = to_bool(v); }},
  };

  const std::map<std::string, Setter>* section = &top;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = [&](const std::string& msg) { return "line " + std::to_string(line_no) + ": " + msg; };
    if (line.front() == '[') {
      if (line == "[tm]") {
        section = &tm_keys;
        tm_enabled = true;
        continue;
      }
      fail(Errc::parse, where("unknown section " + line));
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::parse, where("expected 'key = value'"));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = section->find(key);
    if (it == section->end()) fail(Errc::parse, where("unknown key '" + key + "'"));
    try {
      it->second(value);
    } catch (const LineError& e) {
      fail(Errc::parse, where(key + ": " + e.message));
    } catch (const Error& e) {
      if (e.code() == Errc::parse) fail(Errc::parse, where(e.what()));
      throw;
    }
  }
  if (tm_enabled) cfg.tm = tm;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "sparsity = " << cfg.sparsity.to_string() << '\n'
     << "rank = " << cfg.rank << '\n'
     << "lambda = " << cfg.lambda << '\n'
     << "rho0 = " << cfg.rho0 << '\n'
     << "max_iters = " << cfg.max_iters << '\n'
     << "seed = " << cfg.seed << '\n'
     << "method = " << method_name(cfg.method) << '\n'
     << "steps = " << cfg.steps << '\n'
     << "prune_weighting = " << (cfg.prune_weighting == PruneWeighting::hessian_lite ? "hessian" : "diag") << '\n'
     << "damping = " << (cfg.damping.enabled ? "on" : "off") << '\n'
     << "damping_diag = " << cfg.damping.diag_coeff << '\n'
     << "damping_trace = " << cfg.damping.trace_coeff << '\n';
  const char* kind = cfg.schedule.kind == RhoSchedule::Kind::step_function ? "step"
                     : cfg.schedule.kind == RhoSchedule::Kind::geometric   ? "geometric"
                                                                            : "constant";
  os << "schedule = " << kind << '\n'
     << "schedule_factor = " << cfg.schedule.factor << '\n'
     << "schedule_period = " << cfg.schedule.period << '\n'
     << "rho_cap = " << cfg.rho_cap << '\n'
     << "tol_abs = " << cfg.tol_abs << '\n'
     << "tol_rel = " << cfg.tol_rel << '\n'
     << "normalize_hessian = " << (cfg.normalize_hessian ? "true" : "false") << '\n';
  const char* lr = cfg.low_rank == LowRankChoice::automatic ? "auto"
                   : cfg.low_rank == LowRankChoice::exact   ? "exact"
                                                            : "randomized";
  os << "low_rank = " << lr << '\n'
     << "rsvd_oversample = " << cfg.rsvd_oversample << '\n'
     << "rsvd_power_iters = " << cfg.rsvd_power_iters << '\n'
     << "timing = " << (cfg.record_timing ? "true" : "false") << '\n';
  if (cfg.tm) {
    os << "\n[tm]\n"
       << "epochs = " << cfg.tm->epochs << '\n'
       << "batch = " << cfg.tm->batch << '\n'
       << "lr = " << cfg.tm->lr << '\n'
       << "eta_min = " << cfg.tm->eta_min << '\n'
       << "beta1 = " << cfg.tm->beta1 << '\n'
       << "beta2 = " << cfg.tm->beta2 << '\n'
       << "eps = " << cfg.tm->eps << '\n'
       << "train_norms = " << (cfg.tm->train_norms ? "true" : "false") << '\n';
  }
  return os.str();
}

}  // namespace slr
