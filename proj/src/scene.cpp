// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowdistill/errors.hpp"
#include "flowdistill/io.hpp"

namespace flowdistill {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Ray {
  Vec3 origin;
  Vec3 dir;
  double t_near;
  double t_far;
  bool hit;
};

Ray pixel_ray(const Camera& camera, const CameraBasis& basis, const RenderSettings& s, int i, int j) {
  const double half = camera.half_extent();
  const double x = (2.0 * (j + 0.5) / s.width - 1.0) * half;
  const double y = (2.0 * (i + 0.5) / s.height - 1.0) * half;
  Vec3 dir = basis.forward + x * basis.right + y * basis.down;
  dir = (1.0 / std::sqrt(dot3(dir, dir))) * dir;

  Ray ray{camera.position(), dir, -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), true};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (std::abs(ray.origin[a]) > VoxelScene::kExtent) ray.hit = false;
      continue;
    }
    double t0 = (-VoxelScene::kExtent - ray.origin[a]) / dir[a];
    double t1 = (VoxelScene::kExtent - ray.origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    ray.t_near = std::max(ray.t_near, t0);
    ray.t_far = std::min(ray.t_far, t1);
  }
  ray.t_near = std::max(ray.t_near, 0.0);
  if (!(ray.t_far > ray.t_near)) ray.hit = false;
  return ray;
}

struct Corners {
  std::array<std::size_t, 8> voxel;
  std::array<double, 8> weight;
};

Corners trilinear(const VoxelScene& scene, const Vec3& p) {
  const int n = scene.resolution();
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    double u = (p[a] + VoxelScene::kExtent) / (2.0 * VoxelScene::kExtent) * n - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i0 = std::min(static_cast<int>(std::floor(u)), n - 2);
    base[a] = i0;
    frac[a] = u - i0;
  }
  Corners c{};
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx, ++k) {
        c.voxel[k] = scene.voxel_index(base[0] + dx, base[1] + dy, base[2] + dz);
        c.weight[k] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                      (dz ? frac[2] : 1.0 - frac[2]);
      }
    }
  }
  return c;
}

struct Activated {
  Vector density;  // n^3
  Vector color;    // n^3 x 3
};

Activated activate(const VoxelScene& scene) {
  Activated act;
  const auto dp = scene.density_pre();
  const auto cp = scene.color_pre();
  act.density.resize(dp.size());
  act.color.resize(cp.size());
  for (std::size_t v = 0; v < dp.size(); ++v) act.density[v] = softplus(dp[v]);
  for (std::size_t v = 0; v < cp.size(); ++v) act.color[v] = sigmoid(cp[v]);
  return act;
}

struct Sample {
  Corners corners;
  double density;
  Rgb color;
  double alpha;
  double transmittance;  // before this sample
};

// Marches one ray; returns samples, final transmittance and step length.
double march(const VoxelScene& scene, const Activated& act, const Ray& ray, int samples,
             std::vector<Sample>& out, double& step) {
  out.clear();
  step = 0.0;
  if (!ray.hit) return 1.0;
  step = (ray.t_far - ray.t_near) / samples;
  double transmittance = 1.0;
  for (int k = 0; k < samples; ++k) {
    const double t = ray.t_near + (k + 0.5) * step;
    Sample s{};
    s.corners = trilinear(scene, ray.origin + t * ray.dir);
    for (int q = 0; q < 8; ++q) {
      const std::size_t v = s.corners.voxel[q];
      const double w = s.corners.weight[q];
      s.density += w * act.density[v];
      for (int c = 0; c < 3; ++c) s.color[c] += w * act.color[v * 3 + c];
    }
    s.alpha = -std::expm1(-s.density * step);
    s.transmittance = transmittance;
    transmittance *= 1.0 - s.alpha;
    out.push_back(s);
  }
  return transmittance;
}

void check_camera(const Camera& camera) {
  camera.validate();
  const Vec3 p = camera.position();
  if (std::abs(p[0]) <= VoxelScene::kExtent && std::abs(p[1]) <= VoxelScene::kExtent &&
      std::abs(p[2]) <= VoxelScene::kExtent) {
    throw ConfigError("render: camera is inside the scene cube");
  }
}

}  // namespace

VoxelScene::VoxelScene(int resolution, Rgb background, double density_pre, double color_pre)
    : resolution_(resolution), background_(background) {
  if (resolution < 2) throw ConfigError("voxel scene resolution must be >= 2");
  params_.assign(voxel_count() * (1 + kChannels), color_pre);
  std::fill_n(params_.begin(), voxel_count(), density_pre);
}

VoxelScene::VoxelScene(int resolution, Rgb background, Vector params)
    : resolution_(resolution), background_(background), params_(std::move(params)) {
  if (resolution < 2) throw ConfigError("voxel scene resolution must be >= 2");
  if (params_.size() != voxel_count() * (1 + kChannels)) {
    throw ConfigError("voxel scene parameter vector has the wrong size");
  }
}

double VoxelScene::density(std::size_t voxel) const { return softplus(params_[voxel]); }

double VoxelScene::color(std::size_t voxel, int channel) const {
  return sigmoid(params_[voxel_count() + voxel * kChannels + channel]);
}

void RenderSettings::validate() const {
  if (height < 1 || width < 1) throw ConfigError("render size must be positive");
  if (samples_per_ray < 8) throw ConfigError("render requires samples_per_ray >= 8");
  if (!(alpha_threshold >= 0.0 && alpha_threshold <= 1.0)) {
    throw ConfigError("alpha threshold must lie in [0, 1]");
  }
}

RenderOutput render(const VoxelScene& scene, const Camera& camera, const RenderSettings& settings) {
  settings.validate();
  check_camera(camera);
  const Activated act = activate(scene);
  const CameraBasis basis = camera.basis();
  const std::size_t pixels = settings.pixels();

  RenderOutput out;
  out.height = settings.height;
  out.width = settings.width;
  out.image.assign(3 * pixels, 0.0);
  out.opacity.assign(pixels, 0.0);
  out.mask.assign(pixels, 0);

  std::vector<Sample> samples;
  for (int i = 0; i < settings.height; ++i) {
    for (int j = 0; j < settings.width; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * settings.width + j;
      double step;
      const double t_final =
          march(scene, act, pixel_ray(camera, basis, settings, i, j), settings.samples_per_ray, samples, step);
      Rgb rgb{};
      for (const Sample& s : samples) {
        for (int c = 0; c < 3; ++c) rgb[c] += s.transmittance * s.alpha * s.color[c];
      }
      for (int c = 0; c < 3; ++c) out.image[c * pixels + p] = rgb[c] + t_final * scene.background()[c];
      out.opacity[p] = 1.0 - t_final;
      out.mask[p] = out.opacity[p] > settings.alpha_threshold ? 1 : 0;
    }
  }
  return out;
}

Vector render_vjp(const VoxelScene& scene, const Camera& camera, const RenderSettings& settings,
                  ConstSpan residual) {
  settings.validate();
  check_camera(camera);
  const std::size_t pixels = settings.pixels();
  if (residual.size() != 3 * pixels) throw ConfigError("render_vjp: residual shape mismatch");

  const Activated act = activate(scene);
  const CameraBasis basis = camera.basis();
  const std::size_t nvox = scene.voxel_count();
  Vector grad(scene.params().size(), 0.0);  // accumulated w.r.t. activated values first

  std::vector<Sample> samples;
  for (int i = 0; i < settings.height; ++i) {
    for (int j = 0; j < settings.width; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * settings.width + j;
      const Rgb r{residual[p], residual[pixels + p], residual[2 * pixels + p]};
      if (r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0) continue;
      double step;
      const double t_final =
          march(scene, act, pixel_ray(camera, basis, settings, i, j), settings.samples_per_ray, samples, step);
      if (samples.empty()) continue;

      // suffix = <r, sum_{j>k} T_j a_j c_j + T_N * background>
      double suffix = t_final * (r[0] * scene.background()[0] + r[1] * scene.background()[1] +
                                 r[2] * scene.background()[2]);
      for (std::size_t k = samples.size(); k-- > 0;) {
        const Sample& s = samples[k];
        const double weight = s.transmittance * s.alpha;
        const double rc = r[0] * s.color[0] + r[1] * s.color[1] + r[2] * s.color[2];
        const double t_next = s.transmittance * (1.0 - s.alpha);
        const double d_density = step * (t_next * rc - suffix);
        for (int q = 0; q < 8; ++q) {
          const std::size_t v = s.corners.voxel[q];
          const double w = s.corners.weight[q];
          grad[v] += w * d_density;
          for (int c = 0; c < 3; ++c) grad[nvox + v * 3 + c] += w * weight * r[c];
        }
        suffix += weight * rc;
      }
    }
  }

  // Chain through softplus' = sigmoid(pre) and sigmoid' = s (1 - s).
  const auto dp = scene.density_pre();
  for (std::size_t v = 0; v < nvox; ++v) grad[v] *= sigmoid(dp[v]);
  for (std::size_t v = 0; v < act.color.size(); ++v) {
    const double s = act.color[v];
    grad[nvox + v] *= s * (1.0 - s);
  }
  return grad;
}

void save_scene(const VoxelScene& scene, const std::filesystem::path& stem) {
  nlohmann::json descriptor = {
      {"resolution", scene.resolution()},
      {"extent", VoxelScene::kExtent},
      {"background", scene.background()},
      {"layout", "density_pre[n^3] then color_pre[n^3 x 3] (softplus / sigmoid pre-activations)"},
  };
  write_tensor(stem, scene.params(), {scene.params().size()}, descriptor);
}

VoxelScene load_scene(const std::filesystem::path& stem) {
  const nlohmann::json descriptor = read_json(tensor_sidecar_path(stem));
  const int resolution = descriptor.at("resolution").get<int>();
  const Rgb background = descriptor.at("background").get<Rgb>();
  Vector params = read_f32_blob(tensor_blob_path(stem));
  return VoxelScene(resolution, background, std::move(params));
}

}  // namespace flowdistill
