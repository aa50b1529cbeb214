// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "flowdistill/rng.hpp"

namespace flowdistill {

enum class ScheduleKind { kLinearBeta, kCosine };

/// Variance-preserving noise schedule on normalized time t in [0, 1].
///
/// x_t = alpha_t * x_0 + sigma_t * eps with alpha_t^2 + sigma_t^2 = 1.
/// Linear-beta: log alpha_t = -(beta_min t + (beta_max - beta_min) t^2 / 2) / 2.
/// Cosine: alpha_t = cos(pi/2 (t+s)/(1+s)) / cos(pi/2 s/(1+s)).
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kLinearBeta;
  double beta_min = 0.1;
  double beta_max = 20.0;
  double cosine_offset = 0.008;

  static NoiseSchedule linear_beta(double beta_min = 0.1, double beta_max = 20.0);
  static NoiseSchedule cosine(double offset = 0.008);

  void validate() const;
  bool operator==(const NoiseSchedule&) const = default;
};

struct AlphaSigma {
  double alpha;
  double sigma;

  double ratio() const { return sigma / alpha; }
};

double log_alpha(const NoiseSchedule& schedule, double t);

// d(log alpha_t)/dt.
double log_alpha_derivative(const NoiseSchedule& schedule, double t);

AlphaSigma alpha_sigma(const NoiseSchedule& schedule, double t);

/// d(sigma_t / alpha_t)/dt, the PF-ODE coefficient in the x/alpha form.
/// Defined on (0, 1]; for VP schedules sigma ~ sqrt(t) near 0, so t = 0 is
/// rejected with DomainError.
double ratio_derivative(const NoiseSchedule& schedule, double t);

enum class PlanKind { kUniformRandom, kLinearAnneal, kSqrtAnneal };

/// Maps optimization iteration tau in [0, iterations] to a diffusion time.
struct TimestepPlan {
  PlanKind kind = PlanKind::kLinearAnneal;
  std::int64_t iterations = 500;
  double t_start = 0.98;
  double t_end = 0.02;

  bool is_anneal() const { return kind != PlanKind::kUniformRandom; }
  void validate() const;
  bool operator==(const TimestepPlan&) const = default;
};

// linear: t_start + (t_end - t_start) * tau / iterations
// sqrt:   t_start + (t_end - t_start) * sqrt(tau / iterations)
// uniform-random: Uniform(t_end, t_start) drawn from rng
double anneal_t(const TimestepPlan& plan, std::int64_t tau, RandomStream& rng);

// steps + 1 evenly spaced times from t_start down to t_end.
std::vector<double> uniform_time_grid(double t_start, double t_end, int steps);

std::string_view to_string(ScheduleKind kind);
std::string_view to_string(PlanKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);
PlanKind parse_plan_kind(std::string_view name);

}  // namespace flowdistill
