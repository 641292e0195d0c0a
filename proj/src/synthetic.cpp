// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/synthetic.hpp"

#include <cmath>

namespace slr {

Matrix random_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  return rng.gaussian(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)));
}

Matrix correlated_activations(std::size_t samples, std::size_t n, Rng& rng) {
  const Matrix z = rng.gaussian(samples, n);
  const Matrix mix = rng.gaussian(n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> scale(n);
  for (double& s : scale) s = std::exp(0.5 * rng.normal());
  return scale_cols(matmul(z, mix), scale);
}

PlantedLayer planted_layer(std::size_t rows, std::size_t cols, const SparsityPattern& pattern, std::size_t rank,
                           double noise, Rng& rng) {
  PlantedLayer out;
  out.s_star = project(random_weight(rows, cols, rng), pattern).values;
  const double fs = 1.0 / std::sqrt(std::sqrt(static_cast<double>(rows)));
  out.a_star = rng.gaussian(rows, rank, fs);
  out.b_star = rng.gaussian(cols, rank, fs);
  out.w = out.s_star + matmul_nt(out.a_star, out.b_star);
  if (noise > 0.0) out.w += noise * random_weight(rows, cols, rng);
  return out;
}

SyntheticLayer random_layer_problem(std::size_t n_in, std::size_t n_out, std::size_t samples,
                                    const SparsityPattern& pattern, std::size_t rank, double lambda,
                                    std::uint64_t seed) {
  Rng rng(seed);
  Matrix w = random_weight(n_in, n_out, rng);
  Matrix x = correlated_activations(samples, n_in, rng);
  LayerProblem p = LayerProblem::from_activations(std::move(w), x, lambda, pattern, rank);
  return {std::move(p), std::move(x)};
}

BlockWeights toy_block(const BlockSpec& spec, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  return BlockWeights::random(spec, rng, stddev);
}

std::vector<Matrix> toy_sequences(const BlockSpec& spec, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> scale(spec.d_model);
  for (double& s : scale) s = std::exp(0.5 * rng.normal());
  std::vector<Matrix> xs;
  xs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) xs.push_back(scale_cols(rng.gaussian(spec.seq_len, spec.d_model), scale));
  return xs;
}

}  // namespace slr
