// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/adam.hpp"

#include <cmath>

#include "flowdistill/errors.hpp"

namespace flowdistill {

void AdamHyper::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
}

Vector adam_step(AdamState& state, ConstSpan grad, double lr, const AdamHyper& hyper) {
  if (state.m.empty() && state.step == 0) state = AdamState(grad.size());
  require_same_size(state.m, grad, "adam_step");
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  Vector delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grad[i] * grad[i];
    delta[i] = -lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + hyper.eps);
  }
  return delta;
}

}  // namespace flowdistill
