// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "flowdistill/oracle.hpp"
#include "flowdistill/schedule.hpp"
#include "flowdistill/vec.hpp"

namespace flowdistill {

struct TrajectoryRecord {
  double t = 0.0;
  Vector x;        // x_t
  Vector x_clean;  // (x_t - sigma_t * initial_noise) / alpha_t
  Vector x_gt;     // (x_t - sigma_t * eps_hat) / alpha_t
};

/// One DDIM generation run. records[0] sits at the grid's start time with
/// x = initial_noise; the generated sample is the last record's x_gt.
struct Trajectory {
  Vector initial_noise;
  std::vector<TrajectoryRecord> records;

  const Vector& sample() const { return records.back().x_gt; }
};

struct SamplerGrid {
  int steps = 50;
  double t_start = 0.98;
  double t_end = 0.02;

  void validate() const;
  bool operator==(const SamplerGrid&) const = default;
};

// d(x_t/alpha_t)/dt = d(sigma_t/alpha_t)/dt * eps_hat(x_t, t)
Vector pf_ode_rhs(ConstSpan x_t, double t, const MixtureOracle& oracle,
                  const GuidanceSpec& guidance, const NoiseSchedule& schedule);

// x_t = alpha_t (x_s - sigma_s eps_hat) / alpha_s + sigma_t eps_hat, for t <= s.
Vector ddim_step(ConstSpan x_s, double s, double t, const MixtureOracle& oracle,
                 const GuidanceSpec& guidance, const NoiseSchedule& schedule);

Trajectory ddim_trajectory(ConstSpan initial_noise, const SamplerGrid& grid,
                           const MixtureOracle& oracle, const GuidanceSpec& guidance,
                           const NoiseSchedule& schedule);

// Clean image of the change of variable x_t = alpha_t x_clean + sigma_t noise.
Vector clean_from_noisy(ConstSpan x_t, ConstSpan noise, double t, const NoiseSchedule& schedule);

}  // namespace flowdistill
