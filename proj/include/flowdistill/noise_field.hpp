// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "flowdistill/camera.hpp"
#include "flowdistill/rng.hpp"
#include "flowdistill/vec.hpp"

namespace flowdistill {

using Mask = std::span<const std::uint8_t>;

/// Shape of one queried noise image, channel-major (D x H_hidden x W_hidden).
struct PatchShape {
  int channels = 3;
  int height = 8;
  int width = 8;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return static_cast<std::size_t>(channels) * pixels(); }
  void validate() const;
  bool operator==(const PatchShape&) const = default;
};

/// View-dependent noise from a spherical world map.
///
/// Foreground pixels (mask = 1) read an H_hidden x W_hidden window of the
/// D x H x W world map centred at row round(H theta/pi), column
/// round(W phi/2pi), wrapping on both axes. Background pixels read a fixed
/// background image. The result is blended with fresh noise as
/// sqrt(beta) * deterministic + sqrt(1 - beta) * fresh.
class WorldMapNoise {
 public:
  struct Window {
    int row0;
    int col0;
  };

  WorldMapNoise(PatchShape patch, double theta_extent, double beta, std::uint64_t seed);
  WorldMapNoise(PatchShape patch, double theta_extent, double beta, Vector world_map,
                Vector background);

  const PatchShape& patch() const { return patch_; }
  int map_height() const { return map_height_; }
  int map_width() const { return map_width_; }
  double theta_extent() const { return theta_extent_; }
  double beta() const { return beta_; }
  const Vector& world_map() const { return world_map_; }
  const Vector& background() const { return background_; }

  Window window(const Camera& camera) const;

  // Identifier of the stored entry each output element reads. World-map
  // cells come first, background cells are offset by world_map().size().
  std::vector<std::size_t> source_cells(const Camera& camera, Mask mask) const;
  Vector deterministic(const Camera& camera, Mask mask) const;
  // Draws fresh normals from rng only when beta < 1.
  Vector query(const Camera& camera, Mask mask, RandomStream& rng) const;

 private:
  PatchShape patch_;
  double theta_extent_;
  double beta_;
  int map_height_;
  int map_width_;
  Vector world_map_;
  Vector background_;
};

/// The vanilla eps(c) = eps: one fixed noise image for every view.
class ConstantNoise {
 public:
  ConstantNoise(PatchShape patch, std::uint64_t seed);
  ConstantNoise(PatchShape patch, Vector noise);

  const PatchShape& patch() const { return patch_; }
  const Vector& noise() const { return noise_; }
  Vector query(const Camera& camera, Mask mask, RandomStream& rng) const;

 private:
  PatchShape patch_;
  Vector noise_;
};

/// Independent standard normal noise on every call (the SDS noise prior).
class IidNoise {
 public:
  explicit IidNoise(PatchShape patch);

  const PatchShape& patch() const { return patch_; }
  Vector query(const Camera& camera, Mask mask, RandomStream& rng) const;

 private:
  PatchShape patch_;
};

using NoiseField = std::variant<WorldMapNoise, ConstantNoise, IidNoise>;

Vector query_noise(const NoiseField& field, const Camera& camera, Mask mask, RandomStream& rng);
const PatchShape& patch_of(const NoiseField& field);

struct AlignmentRadius {
  double r_theta;
  double r_phi;
};

// r_theta = 2 tan(fov/2) / (2 tan(fov/2) + extent) * r_cam
// r_phi   = 2 tan(fov/2) / (2 tan(fov/2) + extent * sin(theta_cam)) * r_cam
AlignmentRadius r_plus(const Camera& camera, double theta_extent);

enum class AlignmentAxis { kPolar, kAzimuth };

/// Geometric simulation of the alignment radius: the distance from the origin
/// (along the camera axis) at which a point's image-plane motion between the
/// camera and a copy perturbed by `step` along `axis` equals the motion of the
/// world-map window, found by bisection on exact pinhole projections.
double simulate_alignment_radius(const Camera& camera, const PatchShape& patch,
                                 double theta_extent, AlignmentAxis axis, double step = 1e-4);

struct MarginalStats {
  int views = 0;
  Vector mean;      // per output element
  Vector variance;  // per output element, unbiased
  double max_abs_mean = 0.0;
  double min_variance = 0.0;
  double max_variance = 0.0;
  double adjacent_correlation = 0.0;  // horizontally adjacent pixels, same query
};

struct WorldMapSpec {
  PatchShape patch;
  double theta_extent;
  double beta;
};

/// Per-element statistics of eps(c) | c. Each view draws a fresh camera and a
/// fresh world map / background (seeded from rng), so the statistics are over
/// noise realizations as well as views.
MarginalStats marginal_stats_probe(const WorldMapSpec& spec, const CameraSampler& sampler,
                                   int n_views, Mask mask, RandomStream& rng);

struct OverlapResult {
  double overlap = 0.0;             // shared source cells / cells per query
  double correlation = 0.0;         // beta * overlap: correlation over noise realizations
  double sample_correlation = 0.0;  // the same quantity from this field's stored values
};

// Foreground-only comparison. Values are paired by the source cell they read,
// not by pixel index; fresh noise (beta < 1) contributes the factor beta.
OverlapResult overlap_alignment_probe(const NoiseField& field, const Camera& a, const Camera& b);

}  // namespace flowdistill
