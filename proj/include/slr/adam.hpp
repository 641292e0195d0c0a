// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace slr {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction, following the PyTorch update:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - (lr / (1-b1^t)) * m / (sqrt(v) / sqrt(1-b2^t) + eps)
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, AdamParams params) : params_(params), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> theta, std::span<const double> grad, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

// eta_min + (lr - eta_min) (1 + cos(pi step / total)) / 2
double cosine_annealing(double lr, double eta_min, std::size_t step, std::size_t total);

}  // namespace slr
