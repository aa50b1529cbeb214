// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "flowdistill/errors.hpp"
#include "flowdistill/rng.hpp"
#include "flowdistill/sampler.hpp"

namespace fd = flowdistill;

namespace {

const fd::NoiseSchedule kSchedule = fd::NoiseSchedule::linear_beta();
const fd::GuidanceSpec kNoGuidance{};

// Closed-form probability-flow solution for a single isotropic Gaussian:
// the standardized coordinate (x - alpha mu) / sqrt(alpha^2 s^2 + sigma^2) is conserved.
fd::Vector gaussian_flow(const fd::Vector& x_s, double s_time, double t_time, const fd::Vector& mu, double s) {
  const auto a = fd::alpha_sigma(kSchedule, s_time);
  const auto b = fd::alpha_sigma(kSchedule, t_time);
  const double scale_a = std::sqrt(a.alpha * a.alpha * s * s + a.sigma * a.sigma);
  const double scale_b = std::sqrt(b.alpha * b.alpha * s * s + b.sigma * b.sigma);
  fd::Vector out(x_s.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = b.alpha * mu[i] + scale_b * (x_s[i] - a.alpha * mu[i]) / scale_a;
  }
  return out;
}

fd::Vector ddim_endpoint(const fd::Vector& noise, int steps, const fd::MixtureOracle& o) {
  return fd::ddim_trajectory(noise, {steps, 0.98, 0.02}, o, kNoGuidance, kSchedule).records.back().x;
}

TEST(PfOdeRhs, SymmetricMixtureAtOrigin) {
  fd::MixtureOracle o({{0.5, {2.0}, 0.1}, {0.5, {-2.0}, 0.1}});
  EXPECT_EQ(fd::pf_ode_rhs(fd::Vector{0.0}, 0.5, o, kNoGuidance, kSchedule)[0], 0.0);
}

TEST(PfOdeRhs, PointMassSubstitution) {
  fd::MixtureOracle o({{1.0, {0.7}, 0.0}});
  const double t = 0.4, x = -0.2;
  const auto as = fd::alpha_sigma(kSchedule, t);
  EXPECT_NEAR(fd::pf_ode_rhs(fd::Vector{x}, t, o, kNoGuidance, kSchedule)[0],
              fd::ratio_derivative(kSchedule, t) * (x - as.alpha * 0.7) / as.sigma, 1e-12);
}

TEST(PfOdeRhs, MatchesFineTrajectoryDifference) {
  fd::MixtureOracle o({{0.4, {1.0, 0.5}, 0.3}, {0.6, {-1.0, -0.2}, 0.4}});
  const fd::Vector x{0.4, -0.9};
  const double s = 0.5, h = 1e-4;
  const fd::Vector x_next = fd::ddim_step(x, s, s - h, o, kNoGuidance, kSchedule);
  const double as = fd::alpha_sigma(kSchedule, s).alpha, at = fd::alpha_sigma(kSchedule, s - h).alpha;
  fd::Vector fdiff(2);
  for (int i = 0; i < 2; ++i) fdiff[i] = (x[i] / as - x_next[i] / at) / h;
  EXPECT_LE(fd::relative_error(fd::pf_ode_rhs(x, s, o, kNoGuidance, kSchedule), fdiff), 1e-3);
}

TEST(DdimStep, ZeroLengthAndOrdering) {
  fd::MixtureOracle o({{1.0, {0.0}, 0.5}});
  const fd::Vector x{0.3};
  EXPECT_EQ(fd::ddim_step(x, 0.5, 0.5, o, kNoGuidance, kSchedule), x);
  EXPECT_THROW(fd::ddim_step(x, 0.5, 0.6, o, kNoGuidance, kSchedule), fd::OrderingError);
}

TEST(DdimStep, PointMassIsExact) {
  fd::MixtureOracle o({{1.0, {1.2}, 0.0}});
  const double s = 0.8, t = 0.3, x = 0.5;
  const auto a = fd::alpha_sigma(kSchedule, s), b = fd::alpha_sigma(kSchedule, t);
  EXPECT_NEAR(fd::ddim_step(fd::Vector{x}, s, t, o, kNoGuidance, kSchedule)[0],
              b.alpha * 1.2 + b.sigma * (x - a.alpha * 1.2) / a.sigma, 1e-13);
}

TEST(DdimTrajectory, PointMassSampleIsMean) {
  fd::MixtureOracle o({{1.0, {1.2, -0.4}, 0.0}});
  const auto traj = fd::ddim_trajectory(fd::Vector{0.3, 2.0}, {7, 0.98, 0.02}, o, kNoGuidance, kSchedule);
  for (const auto& r : traj.records) {
    EXPECT_NEAR(r.x_gt[0], 1.2, 1e-10);
    EXPECT_NEAR(r.x_gt[1], -0.4, 1e-10);
  }
}

TEST(DdimTrajectory, RecordsAndChangeOfVariable) {
  fd::MixtureOracle o({{0.3, {2.0, 0.0}, 0.1}, {0.3, {-1.0, 1.7}, 0.1}, {0.4, {-1.0, -1.7}, 0.1}});
  const fd::Vector noise{0.4, -1.3};
  const auto traj = fd::ddim_trajectory(noise, {50, 0.98, 0.02}, o, kNoGuidance, kSchedule);
  ASSERT_EQ(traj.records.size(), 51u);
  EXPECT_EQ(traj.records.front().t, 0.98);
  EXPECT_EQ(traj.records.front().x, noise);
  EXPECT_EQ(traj.records.back().t, 0.02);
  for (const auto& r : traj.records) {
    const auto as = fd::alpha_sigma(kSchedule, r.t);
    fd::Vector rebuilt(2);
    for (int i = 0; i < 2; ++i) rebuilt[i] = as.alpha * r.x_clean[i] + as.sigma * noise[i];
    EXPECT_LE(fd::relative_error(rebuilt, r.x), 1e-9);
  }
  const auto again = fd::ddim_trajectory(noise, {50, 0.98, 0.02}, o, kNoGuidance, kSchedule);
  EXPECT_EQ(again.sample(), traj.sample());
}

TEST(DdimTrajectory, GaussianClosedForm) {
  const fd::Vector mu{1.0, -2.0, 0.5};
  fd::MixtureOracle o({{1.0, mu, 0.5}});
  const fd::Vector noise{0.3, -1.1, 0.8};
  const fd::Vector exact = gaussian_flow(noise, 0.98, 0.02, mu, 0.5);
  const double e1000 = fd::relative_error(ddim_endpoint(noise, 1000, o), exact);
  const double e500 = fd::relative_error(ddim_endpoint(noise, 500, o), exact);
  EXPECT_LE(e1000, 1e-3);
  EXPECT_GE(e500 / e1000, 1.5);
  EXPECT_LE(e500 / e1000, 2.5);
  // 10x reference agrees with the closed form more tightly still.
  EXPECT_LE(fd::relative_error(ddim_endpoint(noise, 10000, o), exact), 0.15 * e1000);
}

TEST(DdimTrajectory, GaussianMarginal) {
  const double mu = 0.5, s = 1.0;
  fd::MixtureOracle o({{1.0, {mu}, s}});
  // The sample is the one-step denoised estimate at t_end, whose spread is
  // the posterior-mean variance alpha^2 s^4 / (alpha^2 s^2 + sigma^2).
  const auto end = fd::alpha_sigma(kSchedule, 0.02);
  const double expected_var =
      end.alpha * end.alpha * s * s * s * s / (end.alpha * end.alpha * s * s + end.sigma * end.sigma);
  const int n = 4000;
  double sum = 0.0, sum_sq = 0.0;
  for (int seed = 0; seed < n; ++seed) {
    fd::Vector noise(1);
    fd::RandomStream(seed, fd::Stream::kInitialNoise).fill_normal(noise);
    const double x = fd::ddim_trajectory(noise, {1000, 0.98, 0.02}, o, kNoGuidance, kSchedule).sample()[0];
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1);
  EXPECT_NEAR(mean, mu, 3 * s / std::sqrt(n));
  EXPECT_NEAR(var, expected_var, 3 * s * s * std::sqrt(2.0 / n));
}

TEST(SamplerGrid, Validation) {
  EXPECT_THROW((fd::SamplerGrid{0, 0.98, 0.02}.validate()), fd::ConfigError);
  EXPECT_THROW((fd::SamplerGrid{10, 0.02, 0.98}.validate()), fd::ConfigError);
}

}  // namespace
