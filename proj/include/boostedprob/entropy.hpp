// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

#pragma once

#include <cmath>

#include "boostedprob/distribution.hpp"

namespace boostedprob {

/// Shannon entropy (nats) of a step. The tail is treated as tail_count tokens
/// sharing tail_mass uniformly, which is exact when the producer enumerated
/// the full vocabulary. 0 * ln 0 is taken as 0.
[[nodiscard]] inline double step_entropy(const StepDistribution& step) noexcept {
  double h = 0.0;
  for (const auto& e : step.head) {
    if (e.prob > 0.0) h -= e.prob * std::log(e.prob);
  }
  if (step.tail_mass > 0.0 && step.tail_count > 0) {
    h -= step.tail_mass * std::log(step.tail_mean());
  }
  return h > 0.0 ? h : 0.0;
}

}  // namespace boostedprob
