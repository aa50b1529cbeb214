// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowdistill/schedule.hpp"
#include "flowdistill/vec.hpp"

namespace flowdistill {

struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  double stddev = 0.0;  // isotropic; 0 is a point mass

  bool operator==(const MixtureComponent&) const = default;
};

/// Closed-form epsilon predictor for an isotropic Gaussian-mixture target.
///
/// Condition ids select component subsets whose weights are renormalized.
/// The reserved id "uncond" (alias "∅") always means every component.
class MixtureOracle {
 public:
  static constexpr std::string_view kUnconditional = "uncond";
  static constexpr std::string_view kUnconditionalAlias = "∅";

  MixtureOracle(std::vector<MixtureComponent> components,
                std::map<std::string, std::vector<std::size_t>> conditions = {});

  std::size_t dimension() const { return dimension_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const std::map<std::string, std::vector<std::size_t>>& conditions() const { return conditions_; }

  bool has_condition(std::string_view id) const;
  // Throws ConfigError for an unknown id.
  const std::vector<std::size_t>& condition_set(std::string_view id) const;

 private:
  std::vector<MixtureComponent> components_;
  std::map<std::string, std::vector<std::size_t>> conditions_;
  std::vector<std::size_t> all_;
  std::size_t dimension_ = 0;
};

/// eps_hat = -sigma_t * grad log p_t(x_t | condition), with
/// p_t = sum_i w_i N(alpha_t mu_i, (alpha_t^2 s_i^2 + sigma_t^2) I).
Vector epsilon_pred(const MixtureOracle& oracle, ConstSpan x_t, double t,
                    const NoiseSchedule& schedule, std::string_view condition);

enum class GuidanceMode { kNone, kCfg, kNfsd };

struct GuidanceSpec {
  GuidanceMode mode = GuidanceMode::kNone;
  double scale = 1.0;
  std::string condition{MixtureOracle::kUnconditional};
  std::optional<std::string> negative_condition;

  void validate() const;
  void validate_against(const MixtureOracle& oracle) const;
  bool operator==(const GuidanceSpec&) const = default;
};

// none: eps_y; cfg and nfsd: eps_uncond + c (eps_y - eps_uncond).
Vector guided_epsilon(const MixtureOracle& oracle, ConstSpan x_t, double t,
                      const NoiseSchedule& schedule, const GuidanceSpec& spec);

// (x_t - sigma_t eps) / alpha_t. NumericDegenerateError when alpha_t < 1e-12.
Vector x0_estimate(ConstSpan x_t, ConstSpan eps, double t, const NoiseSchedule& schedule);

std::string_view to_string(GuidanceMode mode);
GuidanceMode parse_guidance_mode(std::string_view name);

}  // namespace flowdistill
