// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowdistill/camera.hpp"
#include "flowdistill/distill.hpp"
#include "flowdistill/oracle.hpp"
#include "flowdistill/sampler.hpp"
#include "flowdistill/scene.hpp"
#include "flowdistill/schedule.hpp"

namespace flowdistill {

enum class ExperimentKind { kDdimSample, kDistill2d, kDistill3d, kVerifyProp1, kNoiseStats, kRplusCheck };

// Exactly one of mean / fill / mean_file is set. `fill` gives one value per
// channel and expands to a constant image of the render size; `mean_file` is
// a float32 tensor stem resolved against the config file's directory.
struct ComponentConfig {
  double weight = 1.0;
  double stddev = 0.0;
  std::optional<Vector> mean;
  std::optional<Vector> fill;
  std::optional<std::string> mean_file;

  bool operator==(const ComponentConfig&) const = default;
};

struct OracleConfig {
  std::vector<ComponentConfig> components;
  std::map<std::string, std::vector<std::size_t>> conditions;

  bool operator==(const OracleConfig&) const = default;
};

enum class NoiseFieldKind { kWorldMap, kConstant, kIid };

struct NoiseFieldConfig {
  NoiseFieldKind kind = NoiseFieldKind::kWorldMap;
  double theta_extent = 1.5707963267948966;  // pi / 2
  double beta = 1.0;

  bool operator==(const NoiseFieldConfig&) const = default;
};

struct SceneConfig {
  int resolution = 16;
  double density_init = -1.0;  // softplus pre-activation
  double color_init = 0.0;     // sigmoid pre-activation
  Rgb background{1.0, 1.0, 1.0};
  int held_out_views = 8;

  bool operator==(const SceneConfig&) const = default;
};

struct ProbeConfig {
  int views = 10000;
  std::vector<double> betas{0.0, 0.5, 1.0};
  int dphi_points = 16;
  double dphi_max = 3.141592653589793;  // pi
  int base_cameras = 64;
  double foreground_radius = 0.6;  // disk mask, in units of the half image size

  bool operator==(const ProbeConfig&) const = default;
};

struct RplusConfig {
  std::vector<double> theta_extents{1.0471975511965976, 1.5707963267948966, 3.141592653589793};
  double theta_cam = 1.5707963267948966;
  double tolerance = 0.1;

  bool operator==(const RplusConfig&) const = default;
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::kDdimSample;
  NoiseSchedule schedule;
  OracleConfig oracle;
  SamplerGrid sampler;
  DistillConfig distill;
  std::optional<Vector> theta_init;  // 2D start; zeros when absent
  std::optional<NoiseFieldConfig> noise_field;
  CameraSampler cameras;
  RenderSettings render;
  SceneConfig scene;
  ProbeConfig probe;
  RplusConfig rplus;
  double verify_tolerance = 1e-9;
  int snapshot_every = 0;  // 0 disables snapshots
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";

  // Directory relative file references resolve against; not serialized.
  std::filesystem::path base_dir;

  // Throws ConfigError describing the first problem found.
  void validate() const;
  // Effective 3D noise field: the configured one, or world-map for fsd and
  // iid for sds.
  NoiseFieldConfig effective_noise_field() const;

  bool operator==(const RunConfig& other) const;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

MixtureOracle build_oracle(const RunConfig& config);

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(NoiseFieldKind kind);
NoiseFieldKind parse_noise_field_kind(std::string_view name);

}  // namespace flowdistill
