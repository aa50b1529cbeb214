// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/noise_field.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "flowdistill/errors.hpp"

namespace flowdistill {

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

void check_mask(const PatchShape& patch, Mask mask) {
  if (mask.size() != patch.pixels()) {
    throw ConfigError("noise query: mask has " + std::to_string(mask.size()) +
                      " pixels, patch expects " + std::to_string(patch.pixels()));
  }
}

Vector normal_vector(std::size_t n, RandomStream& rng) {
  Vector v(n);
  rng.fill_normal(v);
  return v;
}

}  // namespace

void PatchShape::validate() const {
  if (channels < 1 || height < 1 || width < 1) throw ConfigError("patch shape must be positive");
}

WorldMapNoise::WorldMapNoise(PatchShape patch, double theta_extent, double beta,
                             std::uint64_t seed)
    : WorldMapNoise(patch, theta_extent, beta, Vector{}, Vector{}) {
  RandomStream map_rng(seed, Stream::kWorldMap);
  RandomStream background_rng(seed, Stream::kBackgroundNoise);
  world_map_ = normal_vector(static_cast<std::size_t>(patch_.channels) * map_height_ * map_width_,
                             map_rng);
  background_ = normal_vector(patch_.size(), background_rng);
}

WorldMapNoise::WorldMapNoise(PatchShape patch, double theta_extent, double beta, Vector world_map,
                             Vector background)
    : patch_(patch),
      theta_extent_(theta_extent),
      beta_(beta),
      world_map_(std::move(world_map)),
      background_(std::move(background)) {
  patch_.validate();
  if (!(theta_extent > 0.0)) throw ConfigError("world-map angular extent must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("blending factor beta must lie in [0, 1]");
  map_height_ = std::max(1, static_cast<int>(std::lround(patch_.height * std::numbers::pi / theta_extent)));
  map_width_ =
      std::max(1, static_cast<int>(std::lround(patch_.width * 2.0 * std::numbers::pi / theta_extent)));
  const std::size_t map_size = static_cast<std::size_t>(patch_.channels) * map_height_ * map_width_;
  if (!world_map_.empty() && world_map_.size() != map_size) {
    throw ConfigError("world map has the wrong number of entries");
  }
  if (!background_.empty() && background_.size() != patch_.size()) {
    throw ConfigError("background noise has the wrong number of entries");
  }
}

WorldMapNoise::Window WorldMapNoise::window(const Camera& camera) const {
  const int center_row = static_cast<int>(std::floor(map_height_ * camera.theta / std::numbers::pi + 0.5));
  const int center_col =
      static_cast<int>(std::floor(map_width_ * camera.phi / (2.0 * std::numbers::pi) + 0.5));
  return {center_row - patch_.height / 2, center_col - patch_.width / 2};
}

std::vector<std::size_t> WorldMapNoise::source_cells(const Camera& camera, Mask mask) const {
  check_mask(patch_, mask);
  const Window w = window(camera);
  const std::size_t map_size = world_map_.size();
  std::vector<std::size_t> cells(patch_.size());
  for (int c = 0; c < patch_.channels; ++c) {
    for (int i = 0; i < patch_.height; ++i) {
      for (int j = 0; j < patch_.width; ++j) {
        const std::size_t pixel = static_cast<std::size_t>(i) * patch_.width + j;
        const std::size_t out = static_cast<std::size_t>(c) * patch_.pixels() + pixel;
        if (mask[pixel]) {
          const int row = wrap(w.row0 + i, map_height_);
          const int col = wrap(w.col0 + j, map_width_);
          cells[out] = (static_cast<std::size_t>(c) * map_height_ + row) * map_width_ + col;
        } else {
          cells[out] = map_size + out;
        }
      }
    }
  }
  return cells;
}

Vector WorldMapNoise::deterministic(const Camera& camera, Mask mask) const {
  const std::vector<std::size_t> cells = source_cells(camera, mask);
  const std::size_t map_size = world_map_.size();
  Vector out(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out[k] = cells[k] < map_size ? world_map_[cells[k]] : background_[cells[k] - map_size];
  }
  return out;
}

Vector WorldMapNoise::query(const Camera& camera, Mask mask, RandomStream& rng) const {
  Vector out = deterministic(camera, mask);
  if (beta_ == 1.0) return out;
  const double keep = std::sqrt(beta_);
  const double fresh = std::sqrt(1.0 - beta_);
  for (double& v : out) v = keep * v + fresh * rng.normal();
  return out;
}

ConstantNoise::ConstantNoise(PatchShape patch, std::uint64_t seed) : patch_(patch) {
  patch_.validate();
  RandomStream rng(seed, Stream::kConstantNoise);
  noise_ = normal_vector(patch_.size(), rng);
}

ConstantNoise::ConstantNoise(PatchShape patch, Vector noise) : patch_(patch), noise_(std::move(noise)) {
  patch_.validate();
  if (noise_.size() != patch_.size()) throw ConfigError("constant noise has the wrong size");
}

Vector ConstantNoise::query(const Camera&, Mask mask, RandomStream&) const {
  check_mask(patch_, mask);
  return noise_;
}

IidNoise::IidNoise(PatchShape patch) : patch_(patch) { patch_.validate(); }

Vector IidNoise::query(const Camera&, Mask mask, RandomStream& rng) const {
  check_mask(patch_, mask);
  return normal_vector(patch_.size(), rng);
}

Vector query_noise(const NoiseField& field, const Camera& camera, Mask mask, RandomStream& rng) {
  return std::visit([&](const auto& f) { return f.query(camera, mask, rng); }, field);
}

const PatchShape& patch_of(const NoiseField& field) {
  return std::visit([](const auto& f) -> const PatchShape& { return f.patch(); }, field);
}

AlignmentRadius r_plus(const Camera& camera, double theta_extent) {
  if (!(theta_extent > 0.0)) throw ConfigError("r_plus: angular extent must be positive");
  const double span = 2.0 * camera.half_extent();
  return {span / (span + theta_extent) * camera.radius,
          span / (span + theta_extent * std::sin(camera.theta)) * camera.radius};
}

double simulate_alignment_radius(const Camera& camera, const PatchShape& patch,
                                 double theta_extent, AlignmentAxis axis, double step) {
  const WorldMapNoise dims(patch, theta_extent, 1.0, Vector{}, Vector{});
  const double span = 2.0 * camera.half_extent();

  Camera moved = camera;
  double target;  // image-plane shift of the window content, tan units
  int component;
  if (axis == AlignmentAxis::kAzimuth) {
    moved.phi += step;
    const double cells = dims.map_width() * step / (2.0 * std::numbers::pi);
    target = -cells * span / patch.width;
    component = 0;
  } else {
    moved.theta += step;
    const double cells = dims.map_height() * step / std::numbers::pi;
    target = -cells * span / patch.height;
    component = 1;
  }

  const Vec3 axis_dir = (1.0 / camera.radius) * camera.position();
  auto mismatch = [&](double r) { return project_to_plane(moved, r * axis_dir)[component] - target; };

  // mismatch(0) = -target > 0 and decreases without bound as r -> r_cam.
  double lo = 0.0;
  double hi = camera.radius * (1.0 - 1e-9);
  if (!(mismatch(lo) > 0.0) || !(mismatch(hi) < 0.0)) {
    throw DomainError("simulate_alignment_radius: no alignment point along the camera axis");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * camera.radius; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mismatch(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MarginalStats marginal_stats_probe(const WorldMapSpec& spec, const CameraSampler& sampler,
                                   int n_views, Mask mask, RandomStream& rng) {
  if (n_views < 100) throw ConfigError("marginal_stats_probe requires at least 100 views");
  spec.patch.validate();
  check_mask(spec.patch, mask);

  const std::size_t n = spec.patch.size();
  Vector sum(n, 0.0), sum_sq(n, 0.0);
  double pa = 0, pb = 0, paa = 0, pbb = 0, pab = 0, pairs = 0;

  for (int v = 0; v < n_views; ++v) {
    const Camera cam = sampler.sample(rng);
    const WorldMapNoise field(spec.patch, spec.theta_extent, spec.beta, rng.next_u64());
    const Vector q = field.query(cam, mask, rng);
    for (std::size_t k = 0; k < n; ++k) {
      sum[k] += q[k];
      sum_sq[k] += q[k] * q[k];
    }
    for (int c = 0; c < spec.patch.channels; ++c) {
      for (int i = 0; i < spec.patch.height; ++i) {
        for (int j = 0; j + 1 < spec.patch.width; ++j) {
          const std::size_t k =
              static_cast<std::size_t>(c) * spec.patch.pixels() + static_cast<std::size_t>(i) * spec.patch.width + j;
          const double a = q[k], b = q[k + 1];
          pa += a;
          pb += b;
          paa += a * a;
          pbb += b * b;
          pab += a * b;
          pairs += 1.0;
        }
      }
    }
  }

  MarginalStats stats;
  stats.views = n_views;
  stats.mean.resize(n);
  stats.variance.resize(n);
  stats.min_variance = std::numeric_limits<double>::infinity();
  stats.max_variance = -std::numeric_limits<double>::infinity();
  const double count = n_views;
  for (std::size_t k = 0; k < n; ++k) {
    const double m = sum[k] / count;
    const double var = (sum_sq[k] - count * m * m) / (count - 1.0);
    stats.mean[k] = m;
    stats.variance[k] = var;
    stats.max_abs_mean = std::max(stats.max_abs_mean, std::abs(m));
    stats.min_variance = std::min(stats.min_variance, var);
    stats.max_variance = std::max(stats.max_variance, var);
  }
  if (pairs > 0) {
    const double cov = pab / pairs - (pa / pairs) * (pb / pairs);
    const double va = paa / pairs - (pa / pairs) * (pa / pairs);
    const double vb = pbb / pairs - (pb / pairs) * (pb / pairs);
    stats.adjacent_correlation = cov / std::sqrt(va * vb);
  }
  return stats;
}

namespace {

OverlapResult overlap_from_cells(const std::vector<std::size_t>& cells_a,
                                 const std::vector<std::size_t>& cells_b,
                                 const std::function<double(std::size_t)>& value, double scale) {
  std::unordered_map<std::size_t, std::size_t> in_b;
  in_b.reserve(cells_b.size());
  for (std::size_t k = 0; k < cells_b.size(); ++k) in_b.emplace(cells_b[k], k);

  std::size_t shared = 0;
  double cross = 0.0, energy_a = 0.0, energy_b = 0.0;
  for (std::size_t cell : cells_a) {
    const double v = value(cell);
    energy_a += v * v;
    if (in_b.contains(cell)) {
      ++shared;
      cross += v * v;
    }
  }
  for (std::size_t cell : cells_b) energy_b += value(cell) * value(cell);

  OverlapResult out;
  out.overlap = static_cast<double>(shared) / static_cast<double>(cells_a.size());
  out.correlation = scale * out.overlap;
  out.sample_correlation =
      energy_a > 0.0 && energy_b > 0.0 ? scale * cross / std::sqrt(energy_a * energy_b) : 0.0;
  return out;
}

}  // namespace

OverlapResult overlap_alignment_probe(const NoiseField& field, const Camera& a, const Camera& b) {
  a.validate();
  b.validate();
  const PatchShape& patch = patch_of(field);
  const std::vector<std::uint8_t> foreground(patch.pixels(), 1);

  if (const auto* wm = std::get_if<WorldMapNoise>(&field)) {
    const Vector& map = wm->world_map();
    return overlap_from_cells(wm->source_cells(a, foreground), wm->source_cells(b, foreground),
                              [&](std::size_t cell) { return map[cell]; }, wm->beta());
  }
  if (const auto* cn = std::get_if<ConstantNoise>(&field)) {
    std::vector<std::size_t> cells(patch.size());
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = k;
    const Vector& noise = cn->noise();
    return overlap_from_cells(cells, cells, [&](std::size_t cell) { return noise[cell]; }, 1.0);
  }
  // Independent draws share no source cells.
  return OverlapResult{};
}

}  // namespace flowdistill
