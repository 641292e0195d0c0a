// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/adam.hpp"

#include <cmath>
#include <numbers>

#include "slr/error.hpp"

namespace slr {

void Adam::step(std::span<double> theta, std::span<const double> grad, double lr) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) fail(Errc::shape, "Adam state size mismatch");
  ++t_;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step_size = lr / bc1;
  const double bc2_sqrt = std::sqrt(bc2);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double denom = std::sqrt(v_[i]) / bc2_sqrt + params_.eps;
    theta[i] -= step_size * m_[i] / denom;
  }
}

double cosine_annealing(double lr, double eta_min, std::size_t step, std::size_t total) {
  if (total == 0) return lr;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return eta_min + (lr - eta_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace slr
