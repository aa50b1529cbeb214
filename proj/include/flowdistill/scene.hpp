// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowdistill/camera.hpp"
#include "flowdistill/vec.hpp"

namespace flowdistill {

using Rgb = std::array<double, 3>;

/// Density + RGB voxel grid over the cube [-1, 1]^3.
///
/// Parameters are unconstrained pre-activations laid out as
/// [density (n^3) | color (n^3 x 3, interleaved RGB)]; density is
/// softplus(pre) and color is sigmoid(pre). Voxel (x, y, z) has index
/// (z * n + y) * n + x and its centre at -1 + (k + 0.5) * 2 / n per axis.
class VoxelScene {
 public:
  static constexpr double kExtent = 1.0;
  static constexpr int kChannels = 3;

  VoxelScene(int resolution, Rgb background, double density_pre, double color_pre);
  VoxelScene(int resolution, Rgb background, Vector params);

  int resolution() const { return resolution_; }
  std::size_t voxel_count() const { return static_cast<std::size_t>(resolution_) * resolution_ * resolution_; }
  const Rgb& background() const { return background_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> density_pre() { return std::span(params_).first(voxel_count()); }
  std::span<double> color_pre() { return std::span(params_).subspan(voxel_count()); }
  std::span<const double> density_pre() const { return std::span(params_).first(voxel_count()); }
  std::span<const double> color_pre() const { return std::span(params_).subspan(voxel_count()); }

  std::size_t voxel_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * resolution_ + y) * resolution_ + x;
  }
  double density(std::size_t voxel) const;
  double color(std::size_t voxel, int channel) const;

  bool operator==(const VoxelScene&) const = default;

 private:
  int resolution_;
  Rgb background_;
  Vector params_;
};

struct RenderSettings {
  int height = 8;
  int width = 8;
  int samples_per_ray = 32;
  double alpha_threshold = 0.5;

  void validate() const;
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool operator==(const RenderSettings&) const = default;
};

struct RenderOutput {
  int height = 0;
  int width = 0;
  Vector image;                     // 3 x H x W, channel-major
  Vector opacity;                   // H x W, 1 - final transmittance
  std::vector<std::uint8_t> mask;   // opacity > alpha_threshold
};

/// Front-to-back alpha compositing along pinhole rays with uniform samples
/// inside the cube. Throws ConfigError when the camera is inside the cube.
RenderOutput render(const VoxelScene& scene, const Camera& camera, const RenderSettings& settings);

/// Gradient of <residual, render(scene).image> with respect to the scene's
/// pre-activation parameters (same layout as VoxelScene::params()).
Vector render_vjp(const VoxelScene& scene, const Camera& camera, const RenderSettings& settings,
                  ConstSpan residual);

void save_scene(const VoxelScene& scene, const std::filesystem::path& stem);
VoxelScene load_scene(const std::filesystem::path& stem);

}  // namespace flowdistill
