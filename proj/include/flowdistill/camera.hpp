// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <numbers>

#include "flowdistill/rng.hpp"

namespace flowdistill {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct CameraBasis {
  Vec3 forward;
  Vec3 right;
  Vec3 down;
};

/// Object-centric pinhole camera on a sphere, looking at the origin, +z up.
/// theta is the polar angle from +z, phi the azimuth from +x.
struct Camera {
  double fov = 40.0 * std::numbers::pi / 180.0;
  double radius = 2.5;
  double theta = 0.5 * std::numbers::pi;
  double phi = 0.0;

  void validate() const;
  Vec3 position() const;
  // right = d(position)/d(phi) direction, down = d(position)/d(theta) direction
  // at the image center; both exist at the poles.
  CameraBasis basis() const;
  double half_extent() const;  // tan(fov / 2)

  bool operator==(const Camera&) const = default;
};

/// Uniform camera sampler: theta in [theta_min, theta_max], phi in [0, 2 pi).
struct CameraSampler {
  double theta_min = 60.0 * std::numbers::pi / 180.0;
  double theta_max = 120.0 * std::numbers::pi / 180.0;
  double fov = 40.0 * std::numbers::pi / 180.0;
  double radius = 2.5;

  void validate() const;
  Camera sample(RandomStream& rng) const;
  bool operator==(const CameraSampler&) const = default;
};

// Image-plane coordinates (x right, y down) of a world point, in units of
// tan(angle) so that the image spans [-half_extent, half_extent].
std::array<double, 2> project_to_plane(const Camera& camera, const Vec3& point);

}  // namespace flowdistill
