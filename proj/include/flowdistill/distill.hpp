// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "flowdistill/adam.hpp"
#include "flowdistill/camera.hpp"
#include "flowdistill/noise_field.hpp"
#include "flowdistill/oracle.hpp"
#include "flowdistill/scene.hpp"
#include "flowdistill/schedule.hpp"

namespace flowdistill {

enum class DistillMethod { kSds, kFsd, kFsdEuler };

// Scale applied to the residual before the optimizer. Adam normalizes the
// gradient magnitude, so this only matters through its variation over t.
enum class Weighting { kConstantOne, kSigmaOverAlpha };

enum class OptimizerKind { kAdam, kPlainGradient };

struct DistillConfig {
  DistillMethod method = DistillMethod::kFsd;
  TimestepPlan plan;  // plan.iterations is tau_end
  GuidanceSpec guidance;
  Weighting weighting = Weighting::kConstantOne;
  double learning_rate = 3e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamHyper adam;
  double residual_clamp = 1e3;

  // Defaults per method: fsd anneals linearly with lr 3e-3, sds samples t
  // uniformly with lr 2e-2.
  static DistillConfig defaults(DistillMethod method);

  std::int64_t iterations() const { return plan.iterations; }
  double weight(const AlphaSigma& as) const;
  void validate() const;
  bool operator==(const DistillConfig&) const = default;
};

/// x_t = alpha theta + sigma eps; returns the guided prediction minus the
/// noise term (eps itself, or the negative-condition prediction for nfsd).
Vector sds_residual_2d(ConstSpan theta, ConstSpan eps, double t, const MixtureOracle& oracle,
                       const GuidanceSpec& guidance, const NoiseSchedule& schedule);

/// First-order update of the clean image from s down to t < s with fixed noise.
Vector fsd_euler_step_2d(ConstSpan clean_s, ConstSpan noise, double s, double t,
                         const MixtureOracle& oracle, const GuidanceSpec& guidance,
                         const NoiseSchedule& schedule);

/// Clean image whose noisy version at t is exactly `noise`: (1 - sigma) noise / alpha.
Vector clean_matching_noise(ConstSpan noise, double t, const NoiseSchedule& schedule);

struct IterationLog {
  std::int64_t tau = 0;
  double t = 0.0;
  double loss_proxy = 0.0;  // 0.5 * w_sa * ||residual||^2 with w_sa = sigma / alpha
  double residual_norm = 0.0;
  double theta_norm = 0.0;
};

struct IterationState2d {
  Vector theta;  // parameters used at this iteration (before its update)
  Vector x_gt;   // one-step denoised estimate at this iteration
};

struct Distill2dResult {
  Vector theta;
  Vector fixed_noise;  // empty for sds
  std::vector<IterationLog> log;
  std::vector<IterationState2d> states;
  std::size_t clamped_elements = 0;
};

/// FSD and fsd-euler use one fixed noise (drawn from `seed` unless given);
/// SDS draws fresh noise every iteration. Iterates tau = 0..tau_end inclusive
/// (fsd-euler steps between consecutive plan times, so tau_end steps).
Distill2dResult run_distill_2d(ConstSpan theta0, const DistillConfig& config,
                               const MixtureOracle& oracle, const NoiseSchedule& schedule,
                               std::uint64_t seed, std::optional<Vector> fixed_noise = std::nullopt);

struct Distill3dResult {
  VoxelScene scene;
  std::vector<IterationLog> log;
  std::size_t clamped_elements = 0;
};

using SceneCallback = std::function<void(std::int64_t tau, const VoxelScene& scene)>;

/// Per iteration: sample a camera, render, take the foreground mask, query
/// the noise field, form x_t, and pull the weighted residual back through the
/// renderer. `on_iteration` sees the scene after each update.
Distill3dResult run_distill_3d(VoxelScene scene, const DistillConfig& config, const NoiseField& field,
                               const CameraSampler& cameras, const RenderSettings& render_settings,
                               const MixtureOracle& oracle, const NoiseSchedule& schedule,
                               std::uint64_t seed, const SceneCallback& on_iteration = {});

std::string_view to_string(DistillMethod method);
std::string_view to_string(Weighting weighting);
std::string_view to_string(OptimizerKind kind);
DistillMethod parse_distill_method(std::string_view name);
Weighting parse_weighting(std::string_view name);
OptimizerKind parse_optimizer(std::string_view name);

}  // namespace flowdistill
