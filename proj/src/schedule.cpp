// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flowdistill/errors.hpp"

namespace flowdistill {

namespace {

void check_unit_interval(double t, const char* op) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError(std::string(op) + ": t=" + std::to_string(t) + " outside [0, 1]");
  }
}

double cosine_angle(const NoiseSchedule& s, double t) {
  return 0.5 * std::numbers::pi * (t + s.cosine_offset) / (1.0 + s.cosine_offset);
}

}  // namespace

NoiseSchedule NoiseSchedule::linear_beta(double beta_min, double beta_max) {
  NoiseSchedule s;
  s.kind = ScheduleKind::kLinearBeta;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.validate();
  return s;
}

NoiseSchedule NoiseSchedule::cosine(double offset) {
  NoiseSchedule s;
  s.kind = ScheduleKind::kCosine;
  s.cosine_offset = offset;
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (kind == ScheduleKind::kLinearBeta) {
    if (!(beta_min > 0.0) || !(beta_max >= beta_min)) {
      throw ConfigError("linear-beta schedule requires 0 < beta_min <= beta_max");
    }
  } else if (!(cosine_offset > 0.0)) {
    throw ConfigError("cosine schedule requires a positive offset");
  }
}

double log_alpha(const NoiseSchedule& s, double t) {
  check_unit_interval(t, "log_alpha");
  switch (s.kind) {
    case ScheduleKind::kLinearBeta:
      return -0.5 * (s.beta_min * t + 0.5 * (s.beta_max - s.beta_min) * t * t);
    case ScheduleKind::kCosine:
      return std::log(std::cos(cosine_angle(s, t))) - std::log(std::cos(cosine_angle(s, 0.0)));
  }
  return 0.0;
}

double log_alpha_derivative(const NoiseSchedule& s, double t) {
  check_unit_interval(t, "log_alpha_derivative");
  switch (s.kind) {
    case ScheduleKind::kLinearBeta:
      return -0.5 * (s.beta_min + (s.beta_max - s.beta_min) * t);
    case ScheduleKind::kCosine:
      return -std::tan(cosine_angle(s, t)) * 0.5 * std::numbers::pi / (1.0 + s.cosine_offset);
  }
  return 0.0;
}

AlphaSigma alpha_sigma(const NoiseSchedule& s, double t) {
  check_unit_interval(t, "alpha_sigma");
  const double la = log_alpha(s, t);
  // sigma^2 = 1 - alpha^2 = -expm1(2 log alpha), accurate near t = 0.
  return {std::exp(la), std::sqrt(-std::expm1(2.0 * la))};
}

double ratio_derivative(const NoiseSchedule& s, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw DomainError("ratio_derivative: t=" + std::to_string(t) + " outside (0, 1]");
  }
  // sigma/alpha = sqrt(alpha^-2 - 1)  =>  d/dt = -(d log alpha/dt) / (alpha * sigma)
  const AlphaSigma as = alpha_sigma(s, t);
  return -log_alpha_derivative(s, t) / (as.alpha * as.sigma);
}

void TimestepPlan::validate() const {
  if (iterations < 1) throw ConfigError("timestep plan requires iterations >= 1");
  if (!(t_start > 0.0 && t_start <= 1.0 && t_end > 0.0 && t_end <= 1.0)) {
    throw ConfigError("timestep plan times must lie in (0, 1]");
  }
  if (!(t_start > t_end)) throw ConfigError("timestep plan requires t_start > t_end");
}

double anneal_t(const TimestepPlan& plan, std::int64_t tau, RandomStream& rng) {
  if (tau < 0 || tau > plan.iterations) {
    throw DomainError("anneal_t: tau=" + std::to_string(tau) + " outside [0, " +
                      std::to_string(plan.iterations) + "]");
  }
  const double fraction = static_cast<double>(tau) / static_cast<double>(plan.iterations);
  switch (plan.kind) {
    case PlanKind::kLinearAnneal:
      return plan.t_start + (plan.t_end - plan.t_start) * fraction;
    case PlanKind::kSqrtAnneal:
      return plan.t_start + (plan.t_end - plan.t_start) * std::sqrt(fraction);
    case PlanKind::kUniformRandom:
      return rng.uniform(plan.t_end, plan.t_start);
  }
  return plan.t_end;
}

std::vector<double> uniform_time_grid(double t_start, double t_end, int steps) {
  if (steps < 1) throw ConfigError("time grid requires steps >= 1");
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    grid[k] = t_start + (t_end - t_start) * static_cast<double>(k) / steps;
  }
  grid.back() = t_end;
  return grid;
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinearBeta ? "vp-linear-beta" : "vp-cosine";
}

std::string_view to_string(PlanKind kind) {
  switch (kind) {
    case PlanKind::kUniformRandom: return "uniform-random";
    case PlanKind::kLinearAnneal: return "linear-anneal";
    case PlanKind::kSqrtAnneal: return "sqrt-anneal";
  }
  return "";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "vp-linear-beta") return ScheduleKind::kLinearBeta;
  if (name == "vp-cosine") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind '" + std::string(name) + "'");
}

PlanKind parse_plan_kind(std::string_view name) {
  if (name == "uniform-random") return PlanKind::kUniformRandom;
  if (name == "linear-anneal") return PlanKind::kLinearAnneal;
  if (name == "sqrt-anneal") return PlanKind::kSqrtAnneal;
  throw ConfigError("unknown timestep plan '" + std::string(name) + "'");
}

}  // namespace flowdistill
