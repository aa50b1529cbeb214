// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowdistill/errors.hpp"
#include "flowdistill/experiments.hpp"
#include "flowdistill/noise_field.hpp"

namespace fd = flowdistill;

namespace {

constexpr double kPi = std::numbers::pi;
const fd::PatchShape kPatch{3, 8, 8};
const std::vector<std::uint8_t> kAllForeground(64, 1);

fd::Camera at(double theta, double phi) {
  fd::Camera c;
  c.theta = theta;
  c.phi = phi;
  return c;
}

TEST(WorldMapNoise, MapSize) {
  const fd::WorldMapNoise quarter(kPatch, kPi / 2, 1.0, 0);
  EXPECT_EQ(quarter.map_height(), 16);
  EXPECT_EQ(quarter.map_width(), 32);
  EXPECT_EQ(quarter.world_map().size(), 3u * 16 * 32);
  const fd::WorldMapNoise third(kPatch, kPi / 3, 1.0, 0);
  EXPECT_EQ(third.map_height(), 24);
  EXPECT_EQ(third.map_width(), 48);
  const fd::WorldMapNoise full(kPatch, 2 * kPi, 1.0, 0);
  EXPECT_EQ(full.map_height(), 4);
  EXPECT_EQ(full.map_width(), 8);
}

TEST(WorldMapNoise, WindowCentreAndWrap) {
  const fd::WorldMapNoise f(kPatch, kPi / 2, 1.0, 0);
  auto w = f.window(at(kPi / 2, 0.0));
  EXPECT_EQ(w.row0, 8 - 4);
  EXPECT_EQ(w.col0, 0 - 4);
  w = f.window(at(kPi / 2, kPi));
  EXPECT_EQ(w.col0, 16 - 4);
  // The window starting at col -4 reads columns 28..31 then 0..3.
  const auto cells = f.source_cells(at(kPi / 2, 0.0), kAllForeground);
  EXPECT_EQ(cells[0], static_cast<std::size_t>(4 * 32 + 28));
  EXPECT_EQ(cells[4], static_cast<std::size_t>(4 * 32 + 0));
}

TEST(WorldMapNoise, DeterministicAtBetaOne) {
  const fd::WorldMapNoise f(kPatch, kPi / 2, 1.0, 42);
  fd::RandomStream r1(1, fd::Stream::kFreshNoise), r2(2, fd::Stream::kFreshNoise);
  const fd::Camera c = at(1.2, 0.7);
  EXPECT_EQ(f.query(c, kAllForeground, r1), f.query(c, kAllForeground, r2));
  const fd::WorldMapNoise again(kPatch, kPi / 2, 1.0, 42);
  EXPECT_EQ(again.world_map(), f.world_map());
}

TEST(WorldMapNoise, BackgroundPixelsReadBackground) {
  const fd::WorldMapNoise f(kPatch, kPi / 2, 1.0, 7);
  const std::vector<std::uint8_t> none(64, 0);
  const fd::Vector v = f.deterministic(at(1.0, 2.0), none);
  EXPECT_EQ(v, f.background());
}

TEST(WorldMapNoise, BlendKeepsUnitVariance) {
  const fd::WorldMapNoise f(kPatch, kPi / 2, 0.5, 3);
  const fd::Vector det = f.deterministic(at(1.4, 0.3), kAllForeground);
  fd::RandomStream rng(3, fd::Stream::kFreshNoise);
  const fd::Vector q = f.query(at(1.4, 0.3), kAllForeground, rng);
  fd::RandomStream replay(3, fd::Stream::kFreshNoise);
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_NEAR(q[k], std::sqrt(0.5) * det[k] + std::sqrt(0.5) * replay.normal(), 1e-14);
  }
}

TEST(MarginalStats, UnitGaussianPerElement) {
  const auto mask = fd::disk_mask(kPatch, 0.6);
  for (double beta : {0.0, 0.5, 1.0}) {
    fd::RandomStream rng(0, fd::Stream::kProbe);
    const auto s = fd::marginal_stats_probe({kPatch, kPi / 2, beta}, {}, 4000, mask, rng);
    EXPECT_LE(s.max_abs_mean, 4.5 / std::sqrt(4000.0)) << "beta " << beta;
    EXPECT_GE(s.min_variance, 0.85) << "beta " << beta;
    EXPECT_LE(s.max_variance, 1.15) << "beta " << beta;
  }
}

TEST(Overlap, IdenticalCamerasFullyCorrelated) {
  const fd::NoiseField f = fd::WorldMapNoise(kPatch, kPi / 2, 1.0, 1);
  const auto r = fd::overlap_alignment_probe(f, at(1.3, 0.4), at(1.3, 0.4));
  EXPECT_EQ(r.overlap, 1.0);
  EXPECT_EQ(r.correlation, 1.0);
  EXPECT_NEAR(r.sample_correlation, 1.0, 1e-12);
}

TEST(Overlap, DecaysMonotonicallyWithAzimuth) {
  const fd::NoiseField f = fd::WorldMapNoise(kPatch, kPi / 2, 1.0, 1);
  double previous = 2.0;
  for (int k = 0; k <= 16; ++k) {
    const double dphi = kPi * k / 16;
    const double corr = fd::overlap_alignment_probe(f, at(kPi / 2, 0.2), at(kPi / 2, 0.2 + dphi)).correlation;
    EXPECT_LE(corr, previous) << "dphi " << dphi;
    previous = corr;
  }
  EXPECT_EQ(previous, 0.0);
}

TEST(Overlap, BetaScalesCorrelation) {
  const fd::NoiseField f = fd::WorldMapNoise(kPatch, kPi / 2, 0.5, 1);
  EXPECT_EQ(fd::overlap_alignment_probe(f, at(1.3, 0.4), at(1.3, 0.4)).correlation, 0.5);
}

TEST(Overlap, ConstantAndIidSources) {
  const fd::NoiseField constant = fd::ConstantNoise(kPatch, 2);
  const fd::NoiseField iid = fd::IidNoise(kPatch);
  EXPECT_EQ(fd::overlap_alignment_probe(constant, at(1.0, 0.0), at(2.0, 3.0)).correlation, 1.0);
  EXPECT_EQ(fd::overlap_alignment_probe(iid, at(1.0, 0.0), at(1.0, 0.0)).correlation, 0.0);
}

TEST(AlignmentRadius, Formula) {
  fd::Camera cam;  // 40 degree fov, radius 2.5
  const double two_tan = 2.0 * std::tan(20.0 * kPi / 180.0);
  for (double extent : {kPi / 3, kPi / 2, kPi}) {
    const auto r = fd::r_plus(cam, extent);
    EXPECT_NEAR(r.r_theta, two_tan / (two_tan + extent) * 2.5, 1e-12);
    EXPECT_NEAR(r.r_phi, r.r_theta, 1e-12);  // sin(theta_cam) = 1 at the equator
  }
  cam.theta = kPi / 4;
  const auto r = fd::r_plus(cam, kPi / 2);
  EXPECT_NEAR(r.r_phi, two_tan / (two_tan + kPi / 2 * std::sin(kPi / 4)) * 2.5, 1e-12);
  EXPECT_GT(r.r_phi, r.r_theta);
  EXPECT_THROW(fd::r_plus(cam, 0.0), fd::ConfigError);
}

TEST(AlignmentRadius, GeometricSimulationAgrees) {
  const fd::Camera cam;
  for (double extent : {kPi / 3, kPi / 2, kPi}) {
    const auto r = fd::r_plus(cam, extent);
    const double polar = fd::simulate_alignment_radius(cam, kPatch, extent, fd::AlignmentAxis::kPolar);
    const double azimuth = fd::simulate_alignment_radius(cam, kPatch, extent, fd::AlignmentAxis::kAzimuth);
    EXPECT_NEAR(polar / r.r_theta, 1.0, 0.1);
    EXPECT_NEAR(azimuth / r.r_phi, 1.0, 0.1);
  }
}

}  // namespace
