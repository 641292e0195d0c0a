// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/tm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slr/adam.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

double block_error(const BlockSpec& spec, const BlockWeights& dense, const BlockWeights& compressed,
                   std::span<const Matrix> xs) {
  const std::vector<Matrix> y0 = block_forward(spec, dense, xs);
  const std::vector<Matrix> y1 = block_forward(spec, compressed, xs);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Matrix e = y1[i] - y0[i];
    total += frobenius_dot(e, e);
  }
  return total;
}

namespace {

double loss_against(const BlockSpec& spec, const BlockWeights& w, std::span<const Matrix> xs,
                    const std::vector<Matrix>& targets) {
  const std::vector<Matrix> ys = block_forward(spec, w, xs);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Matrix e = ys[i] - targets[i];
    total += frobenius_dot(e, e);
  }
  return total;
}

void mask_in_place(Matrix& m, const Support& mask) {
  double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!mask.contains_flat(i)) p[i] = 0.0;
}

struct LayerOptim {
  Adam s, a, b;
};

}  // namespace

TmResult tm_refine(const BlockSpec& spec, const BlockWeights& dense, DecomposedBlock init, std::span<const Matrix> xs,
                   const TmHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  spec.validate();
  dense.validate(spec);
  if (xs.empty()) fail(Errc::shape, "tm_refine needs calibration sequences");
  for (LinearId id : kAllLinears) {
    const DecomposedLayer& layer = init[id];
    if (layer.s.rows() != spec.in_dim(id) || layer.s.cols() != spec.out_dim(id) || layer.mask.rows() != layer.s.rows() ||
        layer.mask.cols() != layer.s.cols() || layer.a.rows() != layer.s.rows() || layer.b.rows() != layer.s.cols() ||
        layer.a.cols() != layer.b.cols()) {
      fail(Errc::shape, "decomposed layer '" + std::string(linear_name(id)) + "' is inconsistent with the block");
    }
  }

  const std::vector<Matrix> targets = block_forward(spec, dense, xs);
  const AdamParams ap{hyper.beta1, hyper.beta2, hyper.eps};
  std::array<LayerOptim, kNumLinears> opt;
  for (LinearId id : kAllLinears) {
    const DecomposedLayer& l = init[id];
    opt[static_cast<std::size_t>(id)] = {Adam(l.s.size(), ap), Adam(l.a.size(), ap), Adam(l.b.size(), ap)};
    mask_in_place(init[id].s, l.mask);
  }
  Adam opt_norm1(spec.d_model, ap);
  Adam opt_norm2(spec.d_model, ap);

  const std::size_t count = xs.size();
  const std::size_t per_epoch = (count + hyper.batch - 1) / hyper.batch;
  const std::size_t total_steps = hyper.epochs * per_epoch;

  TmResult result;
  result.initial_loss = loss_against(spec, init.effective(), xs, targets);
  DecomposedBlock best = init;
  double best_loss = result.initial_loss;

  DecomposedBlock cur = std::move(init);
  Rng rng(seed);
  std::vector<std::size_t> order(count);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);

    for (std::size_t start = 0; start < count; start += hyper.batch) {
      const std::size_t end = std::min(count, start + hyper.batch);
      std::vector<Matrix> bx;
      bx.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) bx.push_back(xs[order[i]]);

      const BlockWeights w = cur.effective();
      BlockTape tape;
      const std::vector<Matrix> ys = block_forward(spec, w, bx, &tape);
      std::vector<Matrix> dys;
      dys.reserve(ys.size());
      for (std::size_t i = 0; i < ys.size(); ++i) dys.push_back(2.0 * (ys[i] - targets[order[start + i]]));
      const BlockGrads g = block_backward(spec, w, tape, dys);

      const double lr = cosine_annealing(hyper.lr, hyper.eta_min, step, total_steps);
      for (LinearId id : kAllLinears) {
        DecomposedLayer& layer = cur[id];
        LayerOptim& o = opt[static_cast<std::size_t>(id)];
        const Matrix& gw = g[id];
        Matrix gs = gw;
        mask_in_place(gs, layer.mask);
        // Both factor gradients use the pre-step factors.
        const Matrix ga = matmul(gw, layer.b);
        const Matrix gb = matmul_tn(gw, layer.a);
        o.s.step(layer.s.values(), gs.values(), lr);
        mask_in_place(layer.s, layer.mask);
        if (layer.rank() > 0) {
          o.a.step(layer.a.values(), ga.values(), lr);
          o.b.step(layer.b.values(), gb.values(), lr);
        }
      }
      if (hyper.train_norms) {
        opt_norm1.step(cur.norm1, g.norm1, lr);
        opt_norm2.step(cur.norm2, g.norm2, lr);
      }
      ++step;
    }

    const double loss = loss_against(spec, cur.effective(), xs, targets);
    result.epoch_loss.push_back(loss);
    if (!std::isfinite(loss) || (loss > 10.0 * result.initial_loss && loss > 1e-300)) {
      fail(Errc::numerical, "transformer matching diverged at epoch " + std::to_string(epoch + 1));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = cur;
      result.best_epoch = epoch + 1;
    }
  }

  result.steps = step;
  result.final_loss = best_loss;
  result.block = std::move(best);
  return result;
}

}  // namespace slr
