// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

// slr: batch entry points for sparse-plus-low-rank layer decomposition.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure. Errors
// are reported as one JSON object on stderr.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "slr/baselines.hpp"
#include "slr/block.hpp"
#include "slr/cascade.hpp"
#include "slr/config.hpp"
#include "slr/decompose.hpp"
#include "slr/error.hpp"
#include "slr/kernels.hpp"
#include "slr/linalg.hpp"
#include "slr/rng.hpp"
#include "slr/solver.hpp"
#include "slr/synthetic.hpp"
#include "slr/tensor_io.hpp"
#include "slr/tm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slr;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::usage: return kExitUsage;
    case Errc::not_converged:
    case Errc::numerical: return kExitNumerical;
    default: return kExitData;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io, "write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::parse, path.string() + ": " + e.what());
  }
}

void write_report(const fs::path& path, const RunReport& report) {
  std::ostringstream os;
  report.write_jsonl(os);
  write_text(path, os.str());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
}

// ---- run-config flags -------------------------------------------------------

struct ConfigFlags {
  std::string config_path;
  std::string sparsity, method, prune_weighting, schedule, low_rank;
  std::size_t rank = 0, max_iters = 0, steps = 0;
  double lambda = 0, rho0 = 0, tol_abs = 0, tol_rel = 0, rho_cap = 0;
  std::uint64_t seed = 0;
  bool no_damping = false;
  bool timing = false;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value run configuration file")->check(CLI::ExistingFile);
    opts = {
        app->add_option("--sparsity", sparsity, "N:M (e.g. 2:4) or keep fraction (e.g. 0.5)"),
        app->add_option("--rank", rank, "rank r of the low-rank component"),
        app->add_option("--lambda", lambda, "ridge weight lambda"),
        app->add_option("--rho0", rho0, "initial ADMM penalty"),
        app->add_option("--max-iters", max_iters, "ADMM iteration budget"),
        app->add_option("--seed", seed, "root seed"),
        app->add_option("--method", method, "3basil | altmin-lite | oats | eora"),
        app->add_option("--steps", steps, "alternation steps for altmin-lite / oats"),
        app->add_option("--prune-weighting", prune_weighting,
                        "altmin-lite prune weights: hessian = diag(H')^1/2, diag = diag(X^T X)^1/2 (Wanda-style)"),
        app->add_option("--schedule", schedule, "rho schedule: step | geometric | constant"),
        app->add_option("--low-rank", low_rank, "auto | exact | randomized"),
        app->add_option("--tol-abs", tol_abs, "absolute primal residual tolerance"),
        app->add_option("--tol-rel", tol_rel, "relative primal residual tolerance"),
        app->add_option("--rho-cap", rho_cap, "upper bound on rho"),
    };
    app->add_flag("--no-damping", no_damping, "use H = X^T X + lambda I without damping");
    app->add_flag("--timing", timing, "record wall-clock times (reports are then not reproducible)");
  }

  bool given(std::size_t i) const { return opts[i]->count() > 0; }

  RunConfig build() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    // Flags override the file; reuse the file parser so both share validation.
    std::ostringstream text;
    text << format_config(cfg);
    if (given(0)) text << "sparsity = " << sparsity << '\n';
    if (given(1)) text << "rank = " << rank << '\n';
    if (given(2)) text << "lambda = " << fmt(lambda) << '\n';
    if (given(3)) text << "rho0 = " << fmt(rho0) << '\n';
    if (given(4)) text << "max_iters = " << max_iters << '\n';
    if (given(5)) text << "seed = " << seed << '\n';
    if (given(6)) text << "method = " << method << '\n';
    if (given(7)) text << "steps = " << steps << '\n';
    if (given(8)) text << "prune_weighting = " << prune_weighting << '\n';
    if (given(9)) text << "schedule = " << schedule << '\n';
    if (given(10)) text << "low_rank = " << low_rank << '\n';
    if (given(11)) text << "tol_abs = " << fmt(tol_abs) << '\n';
    if (given(12)) text << "tol_rel = " << fmt(tol_rel) << '\n';
    if (given(13)) text << "rho_cap = " << fmt(rho_cap) << '\n';
    if (no_damping) text << "damping = false\n";
    if (timing) text << "timing = true\n";
    RunConfig out = parse_config(move_tm_last(text.str()));
    out.validate();
    return out;
  }

  static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  // format_config may emit a [tm] section; overrides must land before it.
  static std::string move_tm_last(const std::string& text) {
    std::istringstream in(text);
    std::string line, head, tm;
    bool in_tm = false;
    while (std::getline(in, line)) {
      if (line == "[tm]") in_tm = true;
      else if (!line.empty() && line.front() == '[') in_tm = false;
      (in_tm ? tm : head) += line + '\n';
    }
    return head + tm;
  }
};

struct TmFlags {
  std::size_t epochs = 0, batch = 0;
  double lr = 0, eta_min = 0;
  bool train_norms = false;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts = {app->add_option("--epochs", epochs, "TM epochs"), app->add_option("--batch", batch, "TM batch size"),
            app->add_option("--lr", lr, "TM peak learning rate"),
            app->add_option("--eta-min", eta_min, "TM cosine floor")};
    app->add_flag("--train-norms", train_norms, "also train the RMSNorm scales during TM");
  }

  TmHyper apply(TmHyper h) const {
    if (opts[0]->count()) h.epochs = epochs;
    if (opts[1]->count()) h.batch = batch;
    if (opts[2]->count()) h.lr = lr;
    if (opts[3]->count()) h.eta_min = eta_min;
    if (train_norms) h.train_norms = true;
    h.validate();
    return h;
  }
};

// ---- block directories ------------------------------------------------------

struct BlockDir {
  BlockSpec spec;
  std::vector<BlockWeights> blocks;
  std::vector<Matrix> calib;
};

std::string block_file(std::size_t b, std::string_view what) {
  return "block" + std::to_string(b) + "_" + std::string(what) + ".slrt";
}

std::vector<double> as_vector(const Tensor& t) { return t.values; }

BlockDir load_block_dir(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  if (m.value("kind", "") != "block") fail(Errc::parse, "manifest is not a block manifest");
  BlockDir out;
  out.spec.d_model = m.at("d_model").get<std::size_t>();
  out.spec.n_heads = m.at("n_heads").get<std::size_t>();
  out.spec.d_ff = m.at("d_ff").get<std::size_t>();
  out.spec.seq_len = m.at("seq_len").get<std::size_t>();
  out.spec.validate();
  const std::size_t nb = m.at("blocks").get<std::size_t>();
  for (std::size_t b = 0; b < nb; ++b) {
    BlockWeights w;
    for (LinearId id : kAllLinears) w[id] = read_tensor(dir / block_file(b, linear_name(id))).as_matrix();
    w.norm1 = as_vector(read_tensor(dir / block_file(b, "norm1")));
    w.norm2 = as_vector(read_tensor(dir / block_file(b, "norm2")));
    w.validate(out.spec);
    out.blocks.push_back(std::move(w));
  }
  out.calib = read_tensor(dir / "X.slrt").as_stack();
  for (const Matrix& x : out.calib)
    if (x.cols() != out.spec.d_model) fail(Errc::shape, "calibration width != d_model");
  return out;
}

void write_layer(const fs::path& dir, const std::string& prefix, const DecomposedLayer& layer) {
  write_tensor(dir / (prefix + "_S.slrt"), layer.s);
  write_tensor(dir / (prefix + "_A.slrt"), layer.a);
  write_tensor(dir / (prefix + "_B.slrt"), layer.b);
}

DecomposedLayer read_layer(const fs::path& dir, const std::string& prefix) {
  DecomposedLayer l;
  l.s = read_tensor(dir / (prefix + "_S.slrt")).as_matrix();
  l.a = read_tensor(dir / (prefix + "_A.slrt")).as_matrix();
  l.b = read_tensor(dir / (prefix + "_B.slrt")).as_matrix();
  l.mask = Support::of_nonzeros(l.s);
  if (l.a.rows() != l.s.rows() || l.b.rows() != l.s.cols() || l.a.cols() != l.b.cols()) {
    fail(Errc::shape, "factor shapes for '" + prefix + "' do not match S");
  }
  return l;
}

// ---- gen --------------------------------------------------------------------

struct GenArgs {
  std::string kind = "layer";
  std::string out;
  std::size_t rows = 32, cols = 32, calib_count = 128, seq = 16;
  std::uint64_t seed = 0;
  bool planted = false;
  std::string pattern = "2:4";
  std::size_t rank = 2;
  double noise = 0.0;
  std::size_t d_model = 32, n_heads = 4, d_ff = 64, blocks = 1;
  double weight_std = 0.1;
};

int cmd_gen(const GenArgs& a) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  const std::uint64_t gen_seed = derive_seed(a.seed, "gen");
  json manifest = {{"seed", a.seed}, {"calib", "X.slrt"}, {"calib_count", a.calib_count}};

  if (a.kind == "layer") {
    Rng rng(gen_seed);
    Matrix w;
    if (a.planted) {
      const SparsityPattern pattern = SparsityPattern::parse(a.pattern);
      pattern.validate(a.rows, a.cols);
      if (a.rank > std::min(a.rows, a.cols)) fail(Errc::invariant, "rank exceeds min(rows, cols)");
      PlantedLayer p = planted_layer(a.rows, a.cols, pattern, a.rank, a.noise, rng);
      write_tensor(dir / "S_star.slrt", p.s_star);
      write_tensor(dir / "A_star.slrt", p.a_star);
      write_tensor(dir / "B_star.slrt", p.b_star);
      w = std::move(p.w);
      manifest["planted"] = {{"pattern", pattern.to_string()}, {"rank", a.rank}, {"noise", a.noise}};
    } else {
      w = random_weight(a.rows, a.cols, rng);
    }
    Rng xrng(derive_seed(gen_seed, "calib"));
    std::vector<Matrix> stack;
    stack.reserve(a.calib_count);
    // Shared mixing across segments so the segments look like one feature distribution.
    const Matrix base = correlated_activations(a.calib_count * a.seq, a.rows, xrng);
    for (std::size_t c = 0; c < a.calib_count; ++c) {
      Matrix seg(a.seq, a.rows);
      for (std::size_t t = 0; t < a.seq; ++t)
        for (std::size_t j = 0; j < a.rows; ++j) seg(t, j) = base(c * a.seq + t, j);
      stack.push_back(std::move(seg));
    }
    write_tensor(dir / "W.slrt", w);
    write_tensor(dir / "X.slrt", Tensor::from_stack(stack));
    manifest["kind"] = "layer";
    manifest["weights"] = "W.slrt";
    manifest["rows"] = a.rows;
    manifest["cols"] = a.cols;
    manifest["seq"] = a.seq;
  } else if (a.kind == "block") {
    BlockSpec spec{a.d_model, a.n_heads, a.d_ff, a.seq};
    spec.validate();
    for (std::size_t b = 0; b < a.blocks; ++b) {
      const BlockWeights w = toy_block(spec, derive_seed(gen_seed, b), a.weight_std);
      for (LinearId id : kAllLinears) write_tensor(dir / block_file(b, linear_name(id)), w[id]);
      write_tensor(dir / block_file(b, "norm1"), Tensor::from_vector(w.norm1));
      write_tensor(dir / block_file(b, "norm2"), Tensor::from_vector(w.norm2));
    }
    const std::vector<Matrix> xs = toy_sequences(spec, a.calib_count, derive_seed(gen_seed, "calib"));
    write_tensor(dir / "X.slrt", Tensor::from_stack(xs));
    manifest["kind"] = "block";
    manifest["blocks"] = a.blocks;
    manifest["d_model"] = a.d_model;
    manifest["n_heads"] = a.n_heads;
    manifest["d_ff"] = a.d_ff;
    manifest["seq_len"] = a.seq;
    manifest["weight_std"] = a.weight_std;
  } else {
    fail(Errc::usage, "gen kind must be 'layer' or 'block'");
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

// ---- decompose ----------------------------------------------------------------

LayerProblem load_layer_problem(const std::string& weights, const std::string& calib, const RunConfig& cfg) {
  Matrix w = read_tensor(weights).as_matrix();
  const Matrix x = read_tensor(calib).as_matrix();
  if (x.cols() != w.rows()) fail(Errc::shape, "calibration width does not match weight rows");
  LayerProblem p{std::move(w), gram_of(x), cfg.lambda, cfg.sparsity, cfg.rank};
  p.validate();
  return p;
}

int cmd_decompose(const ConfigFlags& flags, const std::string& weights, const std::string& calib,
                  const std::string& out) {
  const RunConfig cfg = flags.build();
  const LayerProblem problem = load_layer_problem(weights, calib, cfg);
  const auto start = std::chrono::steady_clock::now();
  SolveResult r = decompose(problem, cfg);
  if (cfg.record_timing) {
    r.report.metadata["total_wall_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  r.report.metadata["kernels"] = std::string(kernels::isa_name(kernels::active().isa));
  const fs::path dir(out);
  ensure_dir(dir);
  write_layer(dir, "layer", DecomposedLayer::from_split(r.s, r.l, cfg.rank));
  write_report(dir / "report.jsonl", r.report);
  std::cout << r.report.summary_json().dump() << '\n';
  return 0;
}

// ---- refine-tm / cascade ------------------------------------------------------

int cmd_refine_tm(const ConfigFlags& flags, const TmFlags& tmf, const std::string& block_dir, std::size_t block,
                  const std::string& init_dir, const std::string& out) {
  RunConfig cfg = flags.build();
  cfg.tm = tmf.apply(cfg.tm.value_or(TmHyper{}));
  const BlockDir bd = load_block_dir(block_dir);
  if (block >= bd.blocks.size()) fail(Errc::usage, "block index out of range");
  const BlockWeights& dense = bd.blocks[block];
  const fs::path dir(out);
  ensure_dir(dir);

  DecomposedBlock init;
  json summary = {{"block", block}};
  if (!init_dir.empty()) {
    init.norm1 = dense.norm1;
    init.norm2 = dense.norm2;
    for (LinearId id : kAllLinears) init[id] = read_layer(init_dir, block_file(block, linear_name(id)).substr(0, block_file(block, linear_name(id)).size() - 5));
    summary["init"] = "loaded";
  } else {
    RunConfig layerwise = cfg;
    layerwise.tm.reset();
    CompressedBlock cb = compress_block(bd.spec, dense, bd.calib, layerwise, block);
    for (LinearId id : kAllLinears) {
      write_report(dir / ("block" + std::to_string(block) + "_" + std::string(linear_name(id)) + ".jsonl"),
                   cb.reports[static_cast<std::size_t>(id)]);
    }
    init = std::move(cb.block);
    summary["init"] = std::string(method_name(cfg.method));
  }
  const TmResult tm = tm_refine(bd.spec, dense, std::move(init), bd.calib, *cfg.tm,
                                derive_seed(derive_seed(cfg.seed, "tm-batch"), static_cast<std::uint64_t>(block)));
  for (LinearId id : kAllLinears) {
    write_layer(dir, "block" + std::to_string(block) + "_" + std::string(linear_name(id)), tm.block[id]);
  }
  summary["initial_loss"] = tm.initial_loss;
  summary["final_loss"] = tm.final_loss;
  summary["epoch_loss"] = tm.epoch_loss;
  summary["steps"] = tm.steps;
  summary["best_epoch"] = tm.best_epoch;
  summary["train_norms"] = cfg.tm->train_norms;
  write_text(dir / "tm_report.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_cascade(const ConfigFlags& flags, const TmFlags& tmf, bool with_tm, const std::string& block_dir,
                std::size_t workers, const std::string& out) {
  RunConfig cfg = flags.build();
  if (with_tm) cfg.tm = tmf.apply(cfg.tm.value_or(TmHyper{}));
  const BlockDir bd = load_block_dir(block_dir);
  std::vector<BlockParams> params;
  for (const BlockWeights& w : bd.blocks) params.push_back({bd.spec, w});
  const CascadeResult res = cascade_compress(params, bd.calib, cfg, workers);

  const fs::path dir(out);
  ensure_dir(dir);
  json summary = {{"workers", workers}, {"method", std::string(method_name(cfg.method))}, {"tm", cfg.tm.has_value()}};
  json per_block = json::array();
  for (std::size_t b = 0; b < res.blocks.size(); ++b) {
    const CompressedBlock& cb = res.blocks[b];
    for (LinearId id : kAllLinears) {
      const std::string prefix = "block" + std::to_string(b) + "_" + std::string(linear_name(id));
      write_layer(dir, prefix, cb.block[id]);
      write_report(dir / (prefix + ".jsonl"), cb.reports[static_cast<std::size_t>(id)]);
    }
    json jb = {{"block", b}, {"error_layerwise", cb.error_layerwise}, {"error_final", cb.error_final}};
    if (cb.tm_epoch_loss) jb["tm_epoch_loss"] = *cb.tm_epoch_loss;
    per_block.push_back(jb);
  }
  summary["blocks"] = per_block;
  write_tensor(dir / "X_out.slrt", Tensor::from_stack(res.inputs.back()));
  write_text(dir / "cascade_report.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- evaluate -----------------------------------------------------------------

int cmd_evaluate(const std::string& weights, const std::string& s_path, const std::string& a_path,
                 const std::string& b_path, const std::string& calib, double lambda, const std::string& pattern) {
  const Matrix w = read_tensor(weights).as_matrix();
  const Matrix s = read_tensor(s_path).as_matrix();
  const Matrix a = read_tensor(a_path).as_matrix();
  const Matrix b = read_tensor(b_path).as_matrix();
  const Matrix x = read_tensor(calib).as_matrix();
  require_same_shape(w, s, "weights vs S");
  if (a.rows() != w.rows() || b.rows() != w.cols() || a.cols() != b.cols()) fail(Errc::shape, "factor shapes");
  if (x.cols() != w.rows()) fail(Errc::shape, "calibration width does not match weight rows");
  const Matrix l = matmul_nt(a, b);
  const SparsityPattern pat = SparsityPattern::parse(pattern);
  LayerProblem p{w, gram_of(x), lambda, pat, std::min(a.cols(), std::min(w.rows(), w.cols()))};
  const double obj = objective(p, s, l);
  Matrix e = w - s;
  e -= l;
  const double xw = frobenius_norm(matmul(x, w));
  const double xe = frobenius_norm(matmul(x, e));
  json j = {{"objective", obj},
            {"rel_output_err", xw > 0.0 ? xe / xw : 0.0},
            {"sparsity", sparsity_of(s)},
            {"rank", numerical_rank(l)},
            {"nm_valid", satisfies_pattern(s, pat)}};
  std::cout << j.dump() << '\n';
  return 0;
}

// ---- bench --------------------------------------------------------------------

struct BenchArgs {
  std::string out;
  std::size_t seeds = 20, n = 32, samples = 128, iters = 200, steps = 80;
  std::vector<std::string> patterns{"2:4", "4:8"};
  std::vector<std::size_t> ranks{0, 2, 8};
  std::uint64_t seed = 0;
  double lambda = 0.01;
};

int cmd_bench(const BenchArgs& a) {
  std::ostringstream csv;
  csv << "method,pattern,rank,seed,iter,objective\n";
  csv.precision(17);
  for (const std::string& pat_text : a.patterns) {
    const SparsityPattern pat = SparsityPattern::parse(pat_text);
    for (std::size_t rank : a.ranks) {
      for (std::size_t s = 0; s < a.seeds; ++s) {
        const std::uint64_t inst_seed = derive_seed(derive_seed(a.seed, "gen"), s);
        const SyntheticLayer inst = random_layer_problem(a.n, a.n, a.samples, pat, rank, a.lambda, inst_seed);
        RunConfig cfg;
        cfg.sparsity = pat;
        cfg.rank = rank;
        cfg.lambda = a.lambda;
        cfg.max_iters = a.iters;
        cfg.steps = a.steps;
        cfg.seed = inst_seed;
        cfg.tol_abs = 0.0;
        cfg.tol_rel = 0.0;
        for (Method m : {Method::three_basil, Method::alt_min, Method::oats, Method::eora}) {
          cfg.method = m;
          const SolveResult r = decompose(inst.problem, cfg);
          const std::string prefix =
              std::string(method_name(m)) + "," + pat.to_string() + "," + std::to_string(rank) + "," + std::to_string(s) + ",";
          csv << prefix << 0 << ',' << r.report.initial_objective << '\n';
          for (const IterationRecord& rec : r.report.records) csv << prefix << rec.iter << ',' << rec.objective << '\n';
          csv << prefix << "final," << r.report.final_objective << '\n';
        }
      }
    }
  }
  if (a.out.empty() || a.out == "-") {
    std::cout << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slr: sparse-plus-low-rank layer decomposition toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  GenArgs gen;
  CLI::App* g = app.add_subcommand("gen", "Generate a synthetic layer or toy transformer blocks");
  g->add_option("kind", gen.kind, "layer | block")->check(CLI::IsMember({"layer", "block"}));
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--rows", gen.rows, "layer n_in");
  g->add_option("--cols", gen.cols, "layer n_out");
  g->add_option("--calib-count", gen.calib_count, "number of calibration segments");
  g->add_option("--seq", gen.seq, "tokens per calibration segment");
  g->add_option("--seed", gen.seed, "root seed (gen stream)");
  g->add_flag("--planted", gen.planted, "plant W = S* + A* B*^T + noise");
  g->add_option("--pattern", gen.pattern, "planted sparsity pattern");
  g->add_option("--rank", gen.rank, "planted rank");
  g->add_option("--noise", gen.noise, "planted noise level");
  g->add_option("--d-model", gen.d_model, "block width");
  g->add_option("--heads", gen.n_heads, "attention heads");
  g->add_option("--d-ff", gen.d_ff, "MLP hidden width");
  g->add_option("--blocks", gen.blocks, "number of stacked blocks");
  g->add_option("--weight-std", gen.weight_std, "block weight standard deviation");

  ConfigFlags dflags;
  std::string d_weights, d_calib, d_out;
  CLI::App* d = app.add_subcommand("decompose", "Decompose one layer into S + A B^T");
  dflags.attach(d);
  d->add_option("--weights", d_weights, "W (n_in x n_out) SLRT")->required()->check(CLI::ExistingFile);
  d->add_option("--calib", d_calib, "calibration activations SLRT (samples x n_in, or a stack)")
      ->required()
      ->check(CLI::ExistingFile);
  d->add_option("--out", d_out, "output directory")->required();

  ConfigFlags tflags;
  TmFlags ttm;
  std::string t_dir, t_init, t_out;
  std::size_t t_block = 0;
  CLI::App* t = app.add_subcommand("refine-tm", "Transformer-matching refinement of one block");
  tflags.attach(t);
  ttm.attach(t);
  t->add_option("--block-dir", t_dir, "directory written by `gen block`")->required()->check(CLI::ExistingDirectory);
  t->add_option("--block", t_block, "block index");
  t->add_option("--init", t_init, "directory with blockI_<layer>_{S,A,B}.slrt; default runs layer-wise first")
      ->check(CLI::ExistingDirectory);
  t->add_option("--out", t_out, "output directory")->required();

  ConfigFlags cflags;
  TmFlags ctm;
  std::string c_dir, c_out;
  std::size_t c_workers = 1;
  bool c_tm = false;
  CLI::App* c = app.add_subcommand("cascade", "Compress stacked blocks, propagating compressed activations");
  cflags.attach(c);
  ctm.attach(c);
  c->add_option("--block-dir", c_dir, "directory written by `gen block`")->required()->check(CLI::ExistingDirectory);
  c->add_option("--workers", c_workers, "parallel layer solves per group")->check(CLI::PositiveNumber);
  c->add_flag("--tm", c_tm, "refine every block with transformer matching");
  c->add_option("--out", c_out, "output directory")->required();

  std::string e_w, e_s, e_a, e_b, e_x, e_pattern = "2:4";
  double e_lambda = 0.01;
  CLI::App* e = app.add_subcommand("evaluate", "Score a decomposition on calibration data");
  e->add_option("--weights", e_w, "W SLRT")->required()->check(CLI::ExistingFile);
  e->add_option("--s", e_s, "S SLRT")->required()->check(CLI::ExistingFile);
  e->add_option("--a", e_a, "A SLRT")->required()->check(CLI::ExistingFile);
  e->add_option("--b", e_b, "B SLRT")->required()->check(CLI::ExistingFile);
  e->add_option("--calib", e_x, "calibration SLRT")->required()->check(CLI::ExistingFile);
  e->add_option("--lambda", e_lambda, "ridge weight");
  e->add_option("--sparsity", e_pattern, "pattern checked for nm_valid");

  BenchArgs bench;
  CLI::App* b = app.add_subcommand("bench", "Objective-vs-iteration CSV over a synthetic suite");
  b->add_option("--out", bench.out, "CSV path ('-' for stdout)");
  b->add_option("--seeds", bench.seeds, "instances per cell");
  b->add_option("--n", bench.n, "layer dimension");
  b->add_option("--samples", bench.samples, "calibration rows");
  b->add_option("--iters", bench.iters, "3BASiL iterations");
  b->add_option("--steps", bench.steps, "alternation steps");
  b->add_option("--patterns", bench.patterns, "sparsity patterns");
  b->add_option("--ranks", bench.ranks, "ranks");
  b->add_option("--seed", bench.seed, "root seed");
  b->add_option("--lambda", bench.lambda, "ridge weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*d) return cmd_decompose(dflags, d_weights, d_calib, d_out);
    if (*t) return cmd_refine_tm(tflags, ttm, t_dir, t_block, t_init, t_out);
    if (*c) return cmd_cascade(cflags, ctm, c_tm, c_dir, c_workers, c_out);
    if (*e) return cmd_evaluate(e_w, e_s, e_a, e_b, e_x, e_lambda, e_pattern);
    if (*b) return cmd_bench(bench);
  } catch (const Error& err) {
    std::cerr << json{{"error", std::string(errc_name(err.code()))}, {"message", err.what()}}.dump() << '\n';
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << json{{"error", "internal"}, {"message", err.what()}}.dump() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
