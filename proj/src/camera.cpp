// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/camera.hpp"

#include <cmath>

#include "flowdistill/errors.hpp"

namespace flowdistill {

void Camera::validate() const {
  if (!(fov > 0.0 && fov < std::numbers::pi)) throw ConfigError("camera fov must lie in (0, pi)");
  if (!(radius > 0.0)) throw ConfigError("camera radius must be positive");
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
    throw ConfigError("camera polar angle must lie in [0, pi]");
  }
  if (!(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    throw ConfigError("camera azimuth must lie in [0, 2 pi)");
  }
}

Vec3 Camera::position() const {
  return {radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
          radius * std::cos(theta)};
}

CameraBasis Camera::basis() const {
  const Vec3 forward{-std::sin(theta) * std::cos(phi), -std::sin(theta) * std::sin(phi),
                     -std::cos(theta)};
  const Vec3 right{-std::sin(phi), std::cos(phi), 0.0};
  const Vec3 up = cross3(right, forward);
  return {forward, right, -1.0 * up};
}

double Camera::half_extent() const { return std::tan(0.5 * fov); }

void CameraSampler::validate() const {
  if (!(theta_min >= 0.0 && theta_max <= std::numbers::pi && theta_min <= theta_max)) {
    throw ConfigError("camera sampler requires 0 <= theta_min <= theta_max <= pi");
  }
  if (!(fov > 0.0 && fov < std::numbers::pi)) throw ConfigError("camera sampler fov out of range");
  if (!(radius > 0.0)) throw ConfigError("camera sampler radius must be positive");
}

Camera CameraSampler::sample(RandomStream& rng) const {
  Camera cam;
  cam.fov = fov;
  cam.radius = radius;
  cam.theta = theta_min == theta_max ? theta_min : rng.uniform(theta_min, theta_max);
  cam.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return cam;
}

std::array<double, 2> project_to_plane(const Camera& camera, const Vec3& point) {
  const CameraBasis b = camera.basis();
  const Vec3 rel = point - camera.position();
  const double depth = dot3(rel, b.forward);
  if (!(depth > 0.0)) throw DomainError("project_to_plane: point behind the camera");
  return {dot3(rel, b.right) / depth, dot3(rel, b.down) / depth};
}

}  // namespace flowdistill
