// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "flowdistill/vec.hpp"

namespace flowdistill {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t dimension) : m(dimension, 0.0), v(dimension, 0.0) {}
};

/// One bias-corrected Adam update. Advances `state` and returns the
/// parameter increment -lr * m_hat / (sqrt(v_hat) + eps); the caller adds it.
Vector adam_step(AdamState& state, ConstSpan grad, double lr, const AdamHyper& hyper = {});

}  // namespace flowdistill
