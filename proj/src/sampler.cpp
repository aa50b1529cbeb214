// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/sampler.hpp"

#include <string>

namespace flowdistill {

namespace {

Vector ddim_update(ConstSpan x_s, ConstSpan eps, AlphaSigma from, AlphaSigma to) {
  Vector out(x_s.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = to.alpha * (x_s[i] - from.sigma * eps[i]) / from.alpha + to.sigma * eps[i];
  }
  return out;
}

}  // namespace

void SamplerGrid::validate() const {
  if (steps < 1) throw ConfigError("sampler requires steps >= 1");
  if (!(t_start > 0.0 && t_start <= 1.0 && t_end > 0.0 && t_end < t_start)) {
    throw ConfigError("sampler requires 0 < t_end < t_start <= 1");
  }
}

Vector pf_ode_rhs(ConstSpan x_t, double t, const MixtureOracle& oracle,
                  const GuidanceSpec& guidance, const NoiseSchedule& schedule) {
  const double coefficient = ratio_derivative(schedule, t);
  Vector eps = guided_epsilon(oracle, x_t, t, schedule, guidance);
  for (double& e : eps) e *= coefficient;
  return eps;
}

Vector ddim_step(ConstSpan x_s, double s, double t, const MixtureOracle& oracle,
                 const GuidanceSpec& guidance, const NoiseSchedule& schedule) {
  if (t > s) {
    throw OrderingError("ddim_step: target time " + std::to_string(t) +
                        " is after source time " + std::to_string(s));
  }
  if (t == s) return Vector(x_s.begin(), x_s.end());
  if (!(t > 0.0)) throw DomainError("ddim_step: target time must be > 0");
  const Vector eps = guided_epsilon(oracle, x_s, s, schedule, guidance);
  return ddim_update(x_s, eps, alpha_sigma(schedule, s), alpha_sigma(schedule, t));
}

Vector clean_from_noisy(ConstSpan x_t, ConstSpan noise, double t, const NoiseSchedule& schedule) {
  return x0_estimate(x_t, noise, t, schedule);
}

Trajectory ddim_trajectory(ConstSpan initial_noise, const SamplerGrid& grid,
                           const MixtureOracle& oracle, const GuidanceSpec& guidance,
                           const NoiseSchedule& schedule) {
  grid.validate();
  if (initial_noise.size() != oracle.dimension()) {
    throw ConfigError("ddim_trajectory: initial noise dimension does not match oracle");
  }
  const std::vector<double> times = uniform_time_grid(grid.t_start, grid.t_end, grid.steps);

  Trajectory traj;
  traj.initial_noise.assign(initial_noise.begin(), initial_noise.end());
  traj.records.reserve(times.size());

  Vector x = traj.initial_noise;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const Vector eps = guided_epsilon(oracle, x, t, schedule, guidance);
    TrajectoryRecord rec;
    rec.t = t;
    rec.x_clean = clean_from_noisy(x, traj.initial_noise, t, schedule);
    rec.x_gt = x0_estimate(x, eps, t, schedule);
    rec.x = x;
    traj.records.push_back(std::move(rec));
    if (k + 1 < times.size()) {
      x = ddim_update(x, eps, alpha_sigma(schedule, t), alpha_sigma(schedule, times[k + 1]));
    }
  }
  return traj;
}

}  // namespace flowdistill
