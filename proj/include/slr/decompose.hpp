// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "slr/config.hpp"
#include "slr/solver.hpp"

namespace slr {

// Runs the method selected in cfg on one layer.
SolveResult decompose(const LayerProblem& problem, const RunConfig& cfg);

}  // namespace slr
