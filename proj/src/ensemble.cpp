// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/ensemble.hpp"

#include <limits>

#include "flowdistill/errors.hpp"

namespace flowdistill {

std::size_t nearest_component(ConstSpan x, const MixtureOracle& mixture) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mixture.components().size(); ++i) {
    const double d = distance(x, mixture.components()[i].mean);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double mean_pairwise_distance(const std::vector<Vector>& points) {
  if (points.size() < 2) throw ConfigError("pairwise distance needs at least two points");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) sum += distance(points[i], points[j]);
  }
  const double n = static_cast<double>(points.size());
  return sum / (0.5 * n * (n - 1.0));
}

EnsembleReport ensemble_diversity(const std::vector<Vector>& endpoints, const MixtureOracle& mixture) {
  if (endpoints.size() < 2) throw ConfigError("ensemble_diversity needs at least two endpoints");
  for (const Vector& e : endpoints) require_same_size(e, mixture.components()[0].mean, "ensemble_diversity");

  EnsembleReport report;
  report.endpoints = endpoints;
  const std::size_t n = endpoints.size();
  report.pairwise.assign(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      report.pairwise[i][j] = report.pairwise[j][i] = distance(endpoints[i], endpoints[j]);
    }
  }
  report.dispersion = mean_pairwise_distance(endpoints);
  report.mode_histogram.assign(mixture.components().size(), 0);
  for (const Vector& e : endpoints) {
    const std::size_t k = nearest_component(e, mixture);
    report.mode_assignment.push_back(k);
    ++report.mode_histogram[k];
  }
  return report;
}

nlohmann::json EnsembleReport::to_json(bool include_runtime) const {
  nlohmann::json j = {
      {"endpoints", endpoints},
      {"pairwise", pairwise},
      {"dispersion", dispersion},
      {"mode_assignment", mode_assignment},
      {"mode_histogram", mode_histogram},
  };
  if (include_runtime) j["runtime_seconds"] = runtime_seconds;
  return j;
}

}  // namespace flowdistill
