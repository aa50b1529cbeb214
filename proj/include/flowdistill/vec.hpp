// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flowdistill/errors.hpp"

namespace flowdistill {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;

inline void require_same_size(ConstSpan a, ConstSpan b, const char* what) {
  if (a.size() != b.size()) {
    throw ConfigError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
}

inline double dot(ConstSpan a, ConstSpan b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(ConstSpan a) { return std::sqrt(dot(a, a)); }

inline double distance(ConstSpan a, ConstSpan b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// ||a - b|| / max(||b||, floor)
inline double relative_error(ConstSpan a, ConstSpan b, double floor = 1e-300) {
  return distance(a, b) / std::max(norm(b), floor);
}

}  // namespace flowdistill
