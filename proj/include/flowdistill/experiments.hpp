// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowdistill/config.hpp"
#include "flowdistill/noise_field.hpp"

namespace flowdistill {

enum ExitCode : int { kExitSuccess = 0, kExitVerificationFailure = 1, kExitConfigError = 2 };

struct RunOptions {
  bool verbose = false;
  std::ostream* log = nullptr;  // progress and warnings; nothing is printed when null
};

struct ExperimentResult {
  int exit_code = kExitSuccess;
  nlohmann::json report;  // also written to <output_dir>/report.json
  std::vector<std::filesystem::path> files;
};

/// Validates the whole configuration first (ConfigError before any compute),
/// then runs every seed and writes outputs under config.output_dir. Output
/// files depend only on (config, seeds).
ExperimentResult run_experiment(const RunConfig& config, const RunOptions& options = {});

NoiseField make_noise_field(const NoiseFieldConfig& config, const PatchShape& patch, std::uint64_t seed);

// Evenly spaced azimuths at the middle polar angle of the sampler's range.
std::vector<Camera> held_out_cameras(const CameraSampler& sampler, int count);

// Foreground disk of the given radius (in half-image units) around the centre.
std::vector<std::uint8_t> disk_mask(const PatchShape& patch, double radius);

}  // namespace flowdistill
