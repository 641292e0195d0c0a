// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/cascade.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>

#include "slr/decompose.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"
#include "slr/solver.hpp"

namespace slr {

Matrix stack_rows(std::span<const Matrix> parts) {
  if (parts.empty()) fail(Errc::shape, "nothing to stack");
  std::size_t rows = 0;
  for (const Matrix& m : parts) {
    if (m.cols() != parts.front().cols()) fail(Errc::shape, "stacked parts differ in width");
    rows += m.rows();
  }
  Matrix out(rows, parts.front().cols());
  double* dst = out.data();
  for (const Matrix& m : parts) dst = std::copy(m.data(), m.data() + m.size(), dst);
  return out;
}

Matrix layer_inputs(const BlockSpec& spec, const BlockWeights& w, std::span<const Matrix> xs, LinearId id) {
  BlockTape tape;
  block_forward(spec, w, xs, &tape);
  std::vector<Matrix> parts;
  parts.reserve(tape.seqs.size());
  for (SequenceTape& t : tape.seqs) {
    switch (id) {
      case LinearId::q:
      case LinearId::k:
      case LinearId::v: parts.push_back(std::move(t.n1)); break;
      case LinearId::o: parts.push_back(std::move(t.attn)); break;
      case LinearId::gate:
      case LinearId::up: parts.push_back(std::move(t.n2)); break;
      case LinearId::down: parts.push_back(std::move(t.mlp)); break;
    }
  }
  return stack_rows(parts);
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void run_parallel(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

CompressedBlock compress_block(const BlockSpec& spec, const BlockWeights& dense, std::span<const Matrix> xs,
                               const RunConfig& cfg, std::size_t block_index, std::size_t workers) {
  spec.validate();
  dense.validate(spec);
  if (xs.empty()) fail(Errc::shape, "compress_block needs calibration sequences");

  static const std::vector<std::vector<LinearId>> kGroups = {
      {LinearId::q, LinearId::k, LinearId::v}, {LinearId::o}, {LinearId::gate, LinearId::up}, {LinearId::down}};

  const std::uint64_t block_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(block_index));
  CompressedBlock out;
  out.block.norm1 = dense.norm1;
  out.block.norm2 = dense.norm2;
  for (LinearId id : kAllLinears) out.block[id] = DecomposedLayer::dense(dense[id]);

  BlockWeights current = dense;
  for (const std::vector<LinearId>& group : kGroups) {
    const Matrix x = layer_inputs(spec, current, xs, group.front());
    const Matrix gram = gram_of(x);
    run_parallel(group.size(), workers, [&](std::size_t gi) {
      const LinearId id = group[gi];
      RunConfig layer_cfg = cfg;
      layer_cfg.seed = derive_seed(block_seed, linear_name(id));
      LayerProblem problem{dense[id], gram, cfg.lambda, cfg.sparsity, cfg.rank};
      SolveResult r = decompose(problem, layer_cfg);
      r.report.metadata["layer"] = std::string(linear_name(id));
      r.report.metadata["block"] = block_index;
      out.block[id] = DecomposedLayer::from_split(r.s, r.l, cfg.rank);
      out.reports[static_cast<std::size_t>(id)] = std::move(r.report);
    });
    for (LinearId id : group) current[id] = out.block[id].effective();
  }

  out.error_layerwise = block_error(spec, dense, current, xs);
  out.error_final = out.error_layerwise;
  if (cfg.tm) {
    TmResult tm = tm_refine(spec, dense, std::move(out.block), xs, *cfg.tm,
                            derive_seed(derive_seed(cfg.seed, "tm-batch"), static_cast<std::uint64_t>(block_index)));
    out.block = std::move(tm.block);
    out.error_final = tm.final_loss;
    out.tm_epoch_loss = std::move(tm.epoch_loss);
  }
  return out;
}

CascadeResult cascade_compress(std::span<const BlockParams> blocks, std::vector<Matrix> x0, const RunConfig& cfg,
                               std::size_t workers) {
  if (blocks.empty()) fail(Errc::invariant, "cascade needs at least one block");
  CascadeResult result;
  std::vector<Matrix> x = std::move(x0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    CompressedBlock cb = compress_block(blocks[i].spec, blocks[i].weights, x, cfg, i, workers);
    std::vector<Matrix> next = block_forward(blocks[i].spec, cb.block.effective(), x);
    result.inputs.push_back(std::move(x));
    result.blocks.push_back(std::move(cb));
    x = std::move(next);
  }
  result.inputs.push_back(std::move(x));
  return result;
}

}  // namespace slr
