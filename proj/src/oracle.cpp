// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flowdistill {

namespace {

std::string_view canonical_condition(std::string_view id) {
  return id == MixtureOracle::kUnconditionalAlias ? MixtureOracle::kUnconditional : id;
}

}  // namespace

MixtureOracle::MixtureOracle(std::vector<MixtureComponent> components,
                             std::map<std::string, std::vector<std::size_t>> conditions)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture oracle needs at least one component");
  dimension_ = components_.front().mean.size();
  if (dimension_ == 0) throw ConfigError("mixture component mean is empty");
  for (const auto& c : components_) {
    if (c.mean.size() != dimension_) throw ConfigError("mixture component dimensions differ");
    if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
    if (!(c.stddev >= 0.0)) throw ConfigError("mixture stddev must be non-negative");
  }
  all_.resize(components_.size());
  std::iota(all_.begin(), all_.end(), std::size_t{0});

  for (auto& [id, members] : conditions) {
    const std::string_view key = canonical_condition(id);
    if (key == kUnconditional) {
      if (members != all_) {
        throw ConfigError("condition '" + id + "' is reserved for all components");
      }
      continue;
    }
    if (members.empty()) throw ConfigError("condition '" + id + "' is empty");
    for (std::size_t m : members) {
      if (m >= components_.size()) {
        throw ConfigError("condition '" + id + "' references component " + std::to_string(m));
      }
    }
    conditions_.emplace(std::string(key), std::move(members));
  }
}

bool MixtureOracle::has_condition(std::string_view id) const {
  const std::string_view key = canonical_condition(id);
  return key == kUnconditional || conditions_.contains(std::string(key));
}

const std::vector<std::size_t>& MixtureOracle::condition_set(std::string_view id) const {
  const std::string_view key = canonical_condition(id);
  if (key == kUnconditional) return all_;
  const auto it = conditions_.find(std::string(key));
  if (it == conditions_.end()) {
    throw ConfigError("unknown condition id '" + std::string(id) + "'");
  }
  return it->second;
}

Vector epsilon_pred(const MixtureOracle& oracle, ConstSpan x_t, double t,
                    const NoiseSchedule& schedule, std::string_view condition) {
  const std::size_t d = oracle.dimension();
  if (x_t.size() != d) throw ConfigError("epsilon_pred: x_t dimension does not match oracle");
  const auto& members = oracle.condition_set(condition);
  const AlphaSigma as = alpha_sigma(schedule, t);

  const std::size_t k = members.size();
  std::vector<double> log_resp(k);
  std::vector<double> variance(k);
  for (std::size_t j = 0; j < k; ++j) {
    const MixtureComponent& c = oracle.components()[members[j]];
    const double v = as.alpha * as.alpha * c.stddev * c.stddev + as.sigma * as.sigma;
    if (!(v > 0.0)) {
      throw SingularScoreError("epsilon_pred: point-mass component at sigma_t = 0 (t=" +
                               std::to_string(t) + ")");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = x_t[i] - as.alpha * c.mean[i];
      sq += r * r;
    }
    variance[j] = v;
    log_resp[j] = std::log(c.weight) - 0.5 * static_cast<double>(d) * std::log(v) - 0.5 * sq / v;
  }
  const double peak = *std::max_element(log_resp.begin(), log_resp.end());
  double total = 0.0;
  for (double& lr : log_resp) {
    lr = std::exp(lr - peak);
    total += lr;
  }

  Vector eps(d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const MixtureComponent& c = oracle.components()[members[j]];
    const double scale = as.sigma * (log_resp[j] / total) / variance[j];
    if (scale == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) eps[i] += scale * (x_t[i] - as.alpha * c.mean[i]);
  }
  return eps;
}

void GuidanceSpec::validate() const {
  if (!(scale >= 0.0)) throw ConfigError("guidance scale must be >= 0");
  if (mode == GuidanceMode::kNfsd && !negative_condition) {
    throw ConfigError("nfsd-style guidance requires a negative_condition");
  }
}

void GuidanceSpec::validate_against(const MixtureOracle& oracle) const {
  validate();
  if (!oracle.has_condition(condition)) {
    throw ConfigError("guidance condition '" + condition + "' is not defined by the oracle");
  }
  if (negative_condition && !oracle.has_condition(*negative_condition)) {
    throw ConfigError("negative condition '" + *negative_condition +
                      "' is not defined by the oracle");
  }
}

Vector guided_epsilon(const MixtureOracle& oracle, ConstSpan x_t, double t,
                      const NoiseSchedule& schedule, const GuidanceSpec& spec) {
  spec.validate();
  Vector cond = epsilon_pred(oracle, x_t, t, schedule, spec.condition);
  if (spec.mode == GuidanceMode::kNone) return cond;

  const Vector uncond = epsilon_pred(oracle, x_t, t, schedule, MixtureOracle::kUnconditional);
  for (std::size_t i = 0; i < cond.size(); ++i) {
    cond[i] = uncond[i] + spec.scale * (cond[i] - uncond[i]);
  }
  return cond;
}

Vector x0_estimate(ConstSpan x_t, ConstSpan eps, double t, const NoiseSchedule& schedule) {
  require_same_size(x_t, eps, "x0_estimate");
  const AlphaSigma as = alpha_sigma(schedule, t);
  if (as.alpha < 1e-12) {
    throw NumericDegenerateError("x0_estimate: alpha_t below 1e-12 at t=" + std::to_string(t));
  }
  Vector out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - as.sigma * eps[i]) / as.alpha;
  return out;
}

std::string_view to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::kNone: return "none";
    case GuidanceMode::kCfg: return "cfg";
    case GuidanceMode::kNfsd: return "nfsd-style";
  }
  return "";
}

GuidanceMode parse_guidance_mode(std::string_view name) {
  if (name == "none") return GuidanceMode::kNone;
  if (name == "cfg") return GuidanceMode::kCfg;
  if (name == "nfsd-style") return GuidanceMode::kNfsd;
  throw ConfigError("unknown guidance mode '" + std::string(name) + "'");
}

}  // namespace flowdistill
