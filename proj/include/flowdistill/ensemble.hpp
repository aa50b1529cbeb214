// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowdistill/oracle.hpp"
#include "flowdistill/vec.hpp"

namespace flowdistill {

struct EnsembleReport {
  std::vector<Vector> endpoints;
  std::vector<Vector> pairwise;  // symmetric distance matrix
  double dispersion = 0.0;       // mean over unordered pairs
  std::vector<std::size_t> mode_assignment;
  std::vector<std::size_t> mode_histogram;  // one bin per mixture component
  double runtime_seconds = 0.0;

  // Runtime is left out unless asked for so that reports stay reproducible.
  nlohmann::json to_json(bool include_runtime = false) const;
};

std::size_t nearest_component(ConstSpan x, const MixtureOracle& mixture);
double mean_pairwise_distance(const std::vector<Vector>& points);

/// Requires at least two endpoints of the mixture's dimension.
EnsembleReport ensemble_diversity(const std::vector<Vector>& endpoints, const MixtureOracle& mixture);

}  // namespace flowdistill
