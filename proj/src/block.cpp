// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/block.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slr/error.hpp"
#include "slr/linalg.hpp"

namespace slr {

std::string_view linear_name(LinearId id) {
  switch (id) {
    case LinearId::q: return "q";
    case LinearId::k: return "k";
    case LinearId::v: return "v";
    case LinearId::o: return "o";
    case LinearId::gate: return "gate";
    case LinearId::up: return "up";
    case LinearId::down: return "down";
  }
  return "?";
}

LinearId parse_linear(std::string_view name) {
  for (LinearId id : kAllLinears)
    if (linear_name(id) == name) return id;
  fail(Errc::parse, "unknown linear layer '" + std::string(name) + "'");
}

std::size_t BlockSpec::in_dim(LinearId id) const { return id == LinearId::down ? d_ff : d_model; }
std::size_t BlockSpec::out_dim(LinearId id) const {
  return (id == LinearId::gate || id == LinearId::up) ? d_ff : d_model;
}

void BlockSpec::validate() const {
  if (d_model == 0 || n_heads == 0 || d_ff == 0 || seq_len == 0) fail(Errc::invariant, "block dims must be positive");
  if (d_model % n_heads != 0) fail(Errc::invariant, "d_model must be divisible by n_heads");
  if (!(norm_eps > 0.0)) fail(Errc::invariant, "norm_eps must be positive");
}

BlockWeights BlockWeights::zeros(const BlockSpec& spec) {
  BlockWeights w;
  for (LinearId id : kAllLinears) w[id] = Matrix(spec.in_dim(id), spec.out_dim(id));
  w.norm1.assign(spec.d_model, 1.0);
  w.norm2.assign(spec.d_model, 1.0);
  return w;
}

BlockWeights BlockWeights::random(const BlockSpec& spec, Rng& rng, double stddev) {
  BlockWeights w;
  for (LinearId id : kAllLinears) w[id] = rng.gaussian(spec.in_dim(id), spec.out_dim(id), stddev);
  w.norm1.assign(spec.d_model, 1.0);
  w.norm2.assign(spec.d_model, 1.0);
  return w;
}

void BlockWeights::validate(const BlockSpec& spec) const {
  for (LinearId id : kAllLinears) {
    const Matrix& m = (*this)[id];
    if (m.rows() != spec.in_dim(id) || m.cols() != spec.out_dim(id)) {
      fail(Errc::shape, "weight '" + std::string(linear_name(id)) + "' has the wrong shape");
    }
  }
  if (norm1.size() != spec.d_model || norm2.size() != spec.d_model) fail(Errc::shape, "norm scale length != d_model");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void rms_norm(const Matrix& x, const std::vector<double>& g, double eps, std::vector<double>& r, Matrix& xhat,
              Matrix& out) {
  const std::size_t t = x.rows();
  const std::size_t d = x.cols();
  r.assign(t, 0.0);
  xhat = Matrix(t, d);
  out = Matrix(t, d);
  for (std::size_t i = 0; i < t; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += x(i, j) * x(i, j);
    r[i] = 1.0 / std::sqrt(ss / static_cast<double>(d) + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = x(i, j) * r[i];
      out(i, j) = xhat(i, j) * g[j];
    }
  }
}

// Given dn (gradient at the norm output) returns dx and accumulates dg.
Matrix rms_norm_backward(const Matrix& dn, const Matrix& xhat, const std::vector<double>& r,
                         const std::vector<double>& g, std::vector<double>& dg) {
  const std::size_t t = dn.rows();
  const std::size_t d = dn.cols();
  Matrix dx(t, d);
  std::vector<double> dxhat(d);
  for (std::size_t i = 0; i < t; ++i) {
    double proj = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dg[j] += dn(i, j) * xhat(i, j);
      dxhat[j] = dn(i, j) * g[j];
      proj += dxhat[j] * xhat(i, j);
    }
    proj /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) dx(i, j) = r[i] * (dxhat[j] - xhat(i, j) * proj);
  }
  return dx;
}

}  // namespace

Matrix forward_sequence(const BlockSpec& spec, const BlockWeights& w, const Matrix& x, SequenceTape* tape) {
  if (x.cols() != spec.d_model || x.rows() == 0) fail(Errc::shape, "block input must be seq x d_model");
  const std::size_t t = x.rows();
  const std::size_t hd = spec.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  SequenceTape local;
  SequenceTape& tp = tape ? *tape : local;
  tp.x = x;
  rms_norm(x, w.norm1, spec.norm_eps, tp.r1, tp.xhat1, tp.n1);
  tp.q = matmul(tp.n1, w[LinearId::q]);
  tp.k = matmul(tp.n1, w[LinearId::k]);
  tp.v = matmul(tp.n1, w[LinearId::v]);

  tp.attn = Matrix(t, spec.d_model);
  tp.probs.assign(spec.n_heads, Matrix(t, t));
  for (std::size_t h = 0; h < spec.n_heads; ++h) {
    Matrix& p = tp.probs[h];
    const std::size_t off = h * hd;
    for (std::size_t i = 0; i < t; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += tp.q(i, off + c) * tp.k(j, off + c);
        p(i, j) = s * scale;
        mx = std::max(mx, p(i, j));
      }
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        p(i, j) = std::exp(p(i, j) - mx);
        z += p(i, j);
      }
      for (std::size_t j = 0; j <= i; ++j) p(i, j) /= z;
      for (std::size_t j = 0; j <= i; ++j)
        for (std::size_t c = 0; c < hd; ++c) tp.attn(i, off + c) += p(i, j) * tp.v(j, off + c);
    }
  }

  tp.h = x + matmul(tp.attn, w[LinearId::o]);
  rms_norm(tp.h, w.norm2, spec.norm_eps, tp.r2, tp.xhat2, tp.n2);
  tp.gate = matmul(tp.n2, w[LinearId::gate]);
  tp.up = matmul(tp.n2, w[LinearId::up]);
  tp.mlp = Matrix(t, spec.d_ff);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < spec.d_ff; ++j) {
      const double g = tp.gate(i, j);
      tp.mlp(i, j) = g * sigmoid(g) * tp.up(i, j);
    }
  Matrix y = tp.h + matmul(tp.mlp, w[LinearId::down]);
  if (!all_finite(y)) fail(Errc::numerical, "non-finite block activations");
  return y;
}

std::vector<Matrix> block_forward(const BlockSpec& spec, const BlockWeights& w, std::span<const Matrix> xs,
                                  BlockTape* tape) {
  spec.validate();
  w.validate(spec);
  std::vector<Matrix> ys;
  ys.reserve(xs.size());
  if (tape) tape->seqs.assign(xs.size(), SequenceTape{});
  for (std::size_t i = 0; i < xs.size(); ++i) ys.push_back(forward_sequence(spec, w, xs[i], tape ? &tape->seqs[i] : nullptr));
  return ys;
}

BlockGrads block_backward(const BlockSpec& spec, const BlockWeights& w, const BlockTape& tape,
                          std::span<const Matrix> dys) {
  if (dys.size() != tape.seqs.size()) fail(Errc::shape, "gradient count does not match tape");
  const std::size_t hd = spec.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  BlockGrads g;
  for (LinearId id : kAllLinears) g[id] = Matrix(spec.in_dim(id), spec.out_dim(id));
  g.norm1.assign(spec.d_model, 0.0);
  g.norm2.assign(spec.d_model, 0.0);
  g.dx.reserve(dys.size());

  for (std::size_t sidx = 0; sidx < dys.size(); ++sidx) {
    const SequenceTape& tp = tape.seqs[sidx];
    const Matrix& dy = dys[sidx];
    if (dy.rows() != tp.x.rows() || dy.cols() != spec.d_model) fail(Errc::shape, "dY shape mismatch");
    const std::size_t t = tp.x.rows();

    // MLP branch.
    g[LinearId::down] += matmul_tn(tp.mlp, dy);
    const Matrix dmlp = matmul_nt(dy, w[LinearId::down]);
    Matrix dgate(t, spec.d_ff);
    Matrix dup(t, spec.d_ff);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < spec.d_ff; ++j) {
        const double x = tp.gate(i, j);
        const double sg = sigmoid(x);
        dup(i, j) = dmlp(i, j) * x * sg;
        dgate(i, j) = dmlp(i, j) * tp.up(i, j) * sg * (1.0 + x * (1.0 - sg));
      }
    g[LinearId::gate] += matmul_tn(tp.n2, dgate);
    g[LinearId::up] += matmul_tn(tp.n2, dup);
    Matrix dn2 = matmul_nt(dgate, w[LinearId::gate]);
    dn2 += matmul_nt(dup, w[LinearId::up]);
    Matrix dh = dy;
    dh += rms_norm_backward(dn2, tp.xhat2, tp.r2, w.norm2, g.norm2);

    // Attention branch.
    g[LinearId::o] += matmul_tn(tp.attn, dh);
    const Matrix dattn = matmul_nt(dh, w[LinearId::o]);
    Matrix dq(t, spec.d_model);
    Matrix dk(t, spec.d_model);
    Matrix dv(t, spec.d_model);
    std::vector<double> dp(t);
    for (std::size_t h = 0; h < spec.n_heads; ++h) {
      const Matrix& p = tp.probs[h];
      const std::size_t off = h * hd;
      for (std::size_t i = 0; i < t; ++i) {
        double rowdot = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < hd; ++c) {
            s += dattn(i, off + c) * tp.v(j, off + c);
            dv(j, off + c) += p(i, j) * dattn(i, off + c);
          }
          dp[j] = s;
          rowdot += s * p(i, j);
        }
        for (std::size_t j = 0; j <= i; ++j) {
          const double ds = p(i, j) * (dp[j] - rowdot) * scale;
          for (std::size_t c = 0; c < hd; ++c) {
            dq(i, off + c) += ds * tp.k(j, off + c);
            dk(j, off + c) += ds * tp.q(i, off + c);
          }
        }
      }
    }
    g[LinearId::q] += matmul_tn(tp.n1, dq);
    g[LinearId::k] += matmul_tn(tp.n1, dk);
    g[LinearId::v] += matmul_tn(tp.n1, dv);
    Matrix dn1 = matmul_nt(dq, w[LinearId::q]);
    dn1 += matmul_nt(dk, w[LinearId::k]);
    dn1 += matmul_nt(dv, w[LinearId::v]);
    Matrix dx = dh;
    dx += rms_norm_backward(dn1, tp.xhat1, tp.r1, w.norm1, g.norm1);
    g.dx.push_back(std::move(dx));
  }
  return g;
}

Matrix DecomposedLayer::low_rank() const { return matmul_nt(a, b); }

Matrix DecomposedLayer::effective() const {
  Matrix w = s;
  if (rank() > 0) w += low_rank();
  return w;
}

DecomposedLayer DecomposedLayer::from_split(const Matrix& s, const Matrix& l, std::size_t rank) {
  require_same_shape(s, l, "DecomposedLayer::from_split");
  DecomposedLayer out;
  out.s = s;
  out.mask = Support::of_nonzeros(s);
  if (rank == 0) {
    out.a = Matrix(s.rows(), 0);
    out.b = Matrix(s.cols(), 0);
    return out;
  }
  const TruncatedSvd svd = exact_svd(l, rank);
  std::vector<double> root(svd.sigma.size());
  for (std::size_t i = 0; i < root.size(); ++i) root[i] = std::sqrt(std::max(svd.sigma[i], 0.0));
  out.a = scale_cols(svd.u, root);
  out.b = scale_cols(svd.v, root);
  return out;
}

DecomposedLayer DecomposedLayer::dense(const Matrix& w) {
  DecomposedLayer out;
  out.s = w;
  out.mask = Support(w.rows(), w.cols(), true);
  out.a = Matrix(w.rows(), 0);
  out.b = Matrix(w.cols(), 0);
  return out;
}

BlockWeights DecomposedBlock::effective() const {
  BlockWeights w;
  for (LinearId id : kAllLinears) w[id] = (*this)[id].effective();
  w.norm1 = norm1;
  w.norm2 = norm2;
  return w;
}

}  // namespace slr
