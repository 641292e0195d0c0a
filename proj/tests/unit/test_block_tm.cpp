// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "../oracles.hpp"
#include "slr/adam.hpp"
#include "slr/block.hpp"
#include "slr/rng.hpp"
#include "slr/solver.hpp"
#include "slr/synthetic.hpp"
#include "slr/tm.hpp"

using namespace slr;

namespace {

// Straight-line forward written independently from the library.
Matrix reference_forward(const BlockSpec& spec, const BlockWeights& w, const Matrix& x) {
  const std::size_t t = x.rows(), d = spec.d_model, hd = spec.head_dim();
  auto rms = [&](const Matrix& a, const std::vector<double>& g) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double ms = 0;
      for (std::size_t j = 0; j < a.cols(); ++j) ms += a(i, j) * a(i, j);
      const double r = 1.0 / std::sqrt(ms / a.cols() + spec.norm_eps);
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * r * g[j];
    }
    return out;
  };
  const Matrix n1 = rms(x, w.norm1);
  const Matrix q = oracle::mul(n1, w[LinearId::q]), k = oracle::mul(n1, w[LinearId::k]),
               v = oracle::mul(n1, w[LinearId::v]);
  Matrix attn(t, d);
  for (std::size_t h = 0; h < spec.n_heads; ++h) {
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> s(i + 1);
      double mx = -1e300;
      for (std::size_t j = 0; j <= i; ++j) {
        double dot = 0;
        for (std::size_t c = 0; c < hd; ++c) dot += q(i, h * hd + c) * k(j, h * hd + c);
        s[j] = dot / std::sqrt(static_cast<double>(hd));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < hd; ++c) {
        double acc = 0;
        for (std::size_t j = 0; j <= i; ++j) acc += s[j] / z * v(j, h * hd + c);
        attn(i, h * hd + c) = acc;
      }
    }
  }
  const Matrix hres = x + oracle::mul(attn, w[LinearId::o]);
  const Matrix n2 = rms(hres, w.norm2);
  const Matrix g = oracle::mul(n2, w[LinearId::gate]), u = oracle::mul(n2, w[LinearId::up]);
  Matrix m(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) m(i, j) = g(i, j) / (1 + std::exp(-g(i, j))) * u(i, j);
  return hres + oracle::mul(m, w[LinearId::down]);
}

BlockWeights random_block(const BlockSpec& spec, std::uint64_t seed, double std) {
  Rng rng(seed);
  BlockWeights w = BlockWeights::random(spec, rng, std);
  for (double& g : w.norm1) g = 1.0 + 0.2 * rng.normal();
  for (double& g : w.norm2) g = 1.0 + 0.2 * rng.normal();
  return w;
}

double loss(const BlockSpec& spec, const BlockWeights& w, const std::vector<Matrix>& xs,
            const std::vector<Matrix>& targets) {
  const std::vector<Matrix> ys = block_forward(spec, w, xs);
  double l = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) l += oracle::fro2(ys[i] - targets[i]);
  return l;
}

BlockGrads grads(const BlockSpec& spec, const BlockWeights& w, const std::vector<Matrix>& xs,
                 const std::vector<Matrix>& targets) {
  BlockTape tape;
  const std::vector<Matrix> ys = block_forward(spec, w, xs, &tape);
  std::vector<Matrix> dys;
  for (std::size_t i = 0; i < ys.size(); ++i) dys.push_back(2.0 * (ys[i] - targets[i]));
  return block_backward(spec, w, tape, dys);
}

double rel_err(const std::vector<double>& g, const std::vector<double>& fd) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    num = std::max(num, std::abs(g[i] - fd[i]));
    den = std::max(den, std::abs(fd[i]));
  }
  return num / std::max(den, 1e-300);
}

struct GradFixture {
  BlockSpec spec{8, 2, 16, 4, 1e-6};
  BlockWeights w = random_block(spec, 3, 0.3);
  std::vector<Matrix> xs = toy_sequences(spec, 3, 4);
  std::vector<Matrix> targets;
  GradFixture() {
    Rng rng(5);
    for (const Matrix& x : xs) targets.push_back(rng.gaussian(x.rows(), x.cols()));
  }
};

}  // namespace

TEST_CASE("zero weights leave the input unchanged") {
  const BlockSpec spec;
  const BlockWeights w = BlockWeights::zeros(spec);
  const std::vector<Matrix> xs = toy_sequences(spec, 2, 1);
  const std::vector<Matrix> ys = block_forward(spec, w, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(ys[i] == xs[i]);
}

TEST_CASE("single token by hand") {
  // One token: attention returns v itself, so h = x + rms(x) Wv Wo.
  const BlockSpec spec{2, 1, 2, 1, 0.0};
  BlockWeights w = BlockWeights::zeros(spec);
  w.norm1 = {1, 1};
  w.norm2 = {1, 1};
  w[LinearId::v] = Matrix::identity(2);
  w[LinearId::o] = Matrix::identity(2);
  const Matrix x{{3, 4}};
  const double r = 1.0 / std::sqrt(12.5);
  const Matrix y = forward_sequence(spec, w, x);
  CHECK(y(0, 0) == doctest::Approx(3 + 3 * r));
  CHECK(y(0, 1) == doctest::Approx(4 + 4 * r));
}

TEST_CASE("forward matches an independent implementation") {
  const BlockSpec spec{8, 2, 16, 5, 1e-6};
  const BlockWeights w = random_block(spec, 7, 0.4);
  for (const Matrix& x : toy_sequences(spec, 4, 8))
    CHECK(oracle::max_abs_diff(forward_sequence(spec, w, x), reference_forward(spec, w, x)) < 1e-12);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  GradFixture f;
  BlockTape tape;
  block_forward(f.spec, f.w, f.xs, &tape);
  std::vector<Matrix> dys;
  for (const Matrix& x : f.xs) dys.emplace_back(x.rows(), x.cols());
  const BlockGrads g = block_backward(f.spec, f.w, tape, dys);
  for (LinearId id : kAllLinears) CHECK(max_abs(g[id]) == 0.0);
  for (double v : g.norm1) CHECK(v == 0.0);
  for (double v : g.norm2) CHECK(v == 0.0);
}

TEST_CASE("linear-weight gradients match central differences") {
  GradFixture f;
  const BlockGrads g = grads(f.spec, f.w, f.xs, f.targets);
  for (LinearId id : kAllLinears) {
    CAPTURE(linear_name(id));
    BlockWeights w = f.w;
    std::vector<double> fd, an;
    for (std::size_t i = 0; i < w[id].size(); ++i) {
      double& p = w[id].data()[i];
      fd.push_back(oracle::central_diff([&] { return loss(f.spec, w, f.xs, f.targets); }, p, 1e-5));
      an.push_back(g[id].data()[i]);
    }
    CHECK(rel_err(an, fd) < 1e-5);
  }
}

TEST_CASE("norm-scale and input gradients match central differences") {
  GradFixture f;
  const BlockGrads g = grads(f.spec, f.w, f.xs, f.targets);
  BlockWeights w = f.w;
  for (auto [vec, grad] : {std::pair{&w.norm1, &g.norm1}, std::pair{&w.norm2, &g.norm2}}) {
    std::vector<double> fd;
    for (double& p : *vec) fd.push_back(oracle::central_diff([&] { return loss(f.spec, w, f.xs, f.targets); }, p, 1e-5));
    CHECK(rel_err(*grad, fd) < 1e-5);
  }
  std::vector<Matrix> xs = f.xs;
  std::vector<double> fd, an;
  for (std::size_t s = 0; s < xs.size(); ++s)
    for (std::size_t i = 0; i < xs[s].size(); ++i) {
      fd.push_back(oracle::central_diff([&] { return loss(f.spec, f.w, xs, f.targets); }, xs[s].data()[i], 1e-5));
      an.push_back(g.dx[s].data()[i]);
    }
  CHECK(rel_err(an, fd) < 1e-5);
}

TEST_CASE("factor gradients are G B and G^T A") {
  GradFixture f;
  Rng rng(9);
  const LinearId id = LinearId::up;
  const std::size_t r = 2;
  DecomposedLayer layer{f.w[id], Support(f.w[id].rows(), f.w[id].cols(), true), rng.gaussian(f.w[id].rows(), r, 0.2),
                        rng.gaussian(f.w[id].cols(), r, 0.2)};
  auto loss_of = [&](const DecomposedLayer& dl) {
    BlockWeights w = f.w;
    w[id] = dl.effective();
    return loss(f.spec, w, f.xs, f.targets);
  };
  BlockWeights weff = f.w;
  weff[id] = layer.effective();
  const Matrix g = grads(f.spec, weff, f.xs, f.targets)[id];
  const Matrix da = matmul(g, layer.b), db = matmul_tn(g, layer.a);
  std::vector<double> fa, fb;
  for (double& p : layer.a.values()) fa.push_back(oracle::central_diff([&] { return loss_of(layer); }, p, 1e-5));
  for (double& p : layer.b.values()) fb.push_back(oracle::central_diff([&] { return loss_of(layer); }, p, 1e-5));
  CHECK(rel_err({da.values().begin(), da.values().end()}, fa) < 1e-5);
  CHECK(rel_err({db.values().begin(), db.values().end()}, fb) < 1e-5);
}

TEST_CASE("Adam single step and cosine schedule") {
  Adam adam(2, AdamParams{});
  std::vector<double> theta{1.0, -2.0};
  const std::vector<double> grad{0.5, -3.0};
  adam.step(theta, grad, 0.1);
  // After bias correction the first step is lr * g / (|g| + eps').
  CHECK(theta[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(theta[1] == doctest::Approx(-2.0 + 0.1 * 3.0 / (3.0 + 1e-8)));
  CHECK(adam.steps() == 1);
  CHECK(cosine_annealing(1.0, 0.1, 0, 10) == doctest::Approx(1.0));
  CHECK(cosine_annealing(1.0, 0.1, 10, 10) == doctest::Approx(0.1));
  CHECK(cosine_annealing(1.0, 0.1, 5, 10) == doctest::Approx(0.55));
}

TEST_CASE("DecomposedLayer from a split") {
  Rng rng(10);
  const Matrix s = project(rng.gaussian(8, 8), SemiStructured{2, 4}).values;
  const Matrix l = matmul_nt(rng.gaussian(8, 2), rng.gaussian(8, 2));
  const DecomposedLayer dl = DecomposedLayer::from_split(s, l, 2);
  CHECK(dl.mask == Support::of_nonzeros(s));
  CHECK(dl.rank() == 2);
  CHECK(oracle::max_abs_diff(dl.effective(), s + l) < 1e-12);
  const DecomposedLayer dense = DecomposedLayer::dense(s + l);
  CHECK(dense.rank() == 0);
  CHECK(dense.effective() == s + l);
}

namespace {

struct TmFixture {
  BlockSpec spec{8, 2, 16, 4, 1e-6};
  BlockWeights dense = toy_block(spec, 11, 0.1);
  std::vector<Matrix> xs = toy_sequences(spec, 16, 12);

  DecomposedBlock compressed(std::size_t rank) const {
    DecomposedBlock b;
    b.norm1 = dense.norm1;
    b.norm2 = dense.norm2;
    for (LinearId id : kAllLinears) {
      const Matrix s = project(dense[id], SemiStructured{2, 4}).values;
      b[id] = DecomposedLayer::from_split(s, dense[id] - s, rank);
    }
    return b;
  }
};

}  // namespace

TEST_CASE("TM from the dense weights is already optimal") {
  TmFixture f;
  DecomposedBlock init;
  init.norm1 = f.dense.norm1;
  init.norm2 = f.dense.norm2;
  for (LinearId id : kAllLinears) init[id] = DecomposedLayer::dense(f.dense[id]);
  TmHyper hyper;
  hyper.epochs = 3;
  const TmResult r = tm_refine(f.spec, f.dense, init, f.xs, hyper, 1);
  CHECK(r.initial_loss == 0.0);
  CHECK(r.final_loss == 0.0);
  for (LinearId id : kAllLinears) CHECK(r.block[id].s == f.dense[id]);
}

TEST_CASE("TM with rank 0 and a small step does not increase the loss") {
  TmFixture f;
  TmHyper hyper;
  hyper.epochs = 5;
  hyper.lr = 1e-4;
  hyper.eta_min = 1e-5;
  const TmResult r = tm_refine(f.spec, f.dense, f.compressed(0), f.xs, hyper, 2);
  REQUIRE(r.epoch_loss.size() == 5);
  CHECK(r.epoch_loss.front() <= r.initial_loss);
  for (std::size_t i = 1; i < r.epoch_loss.size(); ++i) CHECK(r.epoch_loss[i] <= r.epoch_loss[i - 1] * (1 + 1e-9));
  CHECK(r.final_loss <= r.initial_loss);
  CHECK(r.steps == 5 * 2);
}

TEST_CASE("TM keeps masks, ranks and norm scales") {
  TmFixture f;
  const DecomposedBlock init = f.compressed(2);
  TmHyper hyper;
  hyper.epochs = 4;
  hyper.lr = 1e-3;
  const TmResult r = tm_refine(f.spec, f.dense, init, f.xs, hyper, 3);
  CHECK(r.final_loss < r.initial_loss);
  for (LinearId id : kAllLinears) {
    CHECK(r.block[id].mask == init[id].mask);
    CHECK(Support::of_nonzeros(r.block[id].s).popcount() <= init[id].mask.popcount());
    for (std::size_t i = 0; i < r.block[id].s.size(); ++i)
      if (!init[id].mask.contains_flat(i)) CHECK(r.block[id].s.data()[i] == 0.0);
    CHECK(r.block[id].rank() == 2);
  }
  CHECK(r.block.norm1 == init.norm1);
  CHECK(r.block.norm2 == init.norm2);
  CHECK(r.final_loss == doctest::Approx(block_error(f.spec, f.dense, r.block.effective(), f.xs)).epsilon(1e-10));

  const TmResult again = tm_refine(f.spec, f.dense, init, f.xs, hyper, 3);
  for (LinearId id : kAllLinears) {
    CHECK(again.block[id].s == r.block[id].s);
    CHECK(again.block[id].a == r.block[id].a);
  }
}

TEST_CASE("TM trains norm scales only when asked") {
  TmFixture f;
  TmHyper hyper;
  hyper.epochs = 2;
  hyper.lr = 1e-3;
  hyper.train_norms = true;
  const DecomposedBlock init = f.compressed(1);
  const TmResult r = tm_refine(f.spec, f.dense, init, f.xs, hyper, 4);
  CHECK(r.block.norm1 != init.norm1);
}
