// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

// flowdistill <experiment> --config <path> [--seed N --out DIR --verbose]
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowdistill/config.hpp"
#include "flowdistill/errors.hpp"
#include "flowdistill/experiments.hpp"

namespace fd = flowdistill;

int main(int argc, char** argv) {
  CLI::App app{"Score distillation and probability-flow sampling experiments on analytic targets"};
  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool verbose = false;
  app.add_option("experiment", experiment,
                 "ddim-sample | distill-2d | distill-3d | verify-prop1 | noise-stats | rplus-check")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "run this single seed instead of the configured list");
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_flag("--verbose", verbose, "print progress to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fd::kExitSuccess : fd::kExitConfigError;
  }

  try {
    fd::RunConfig config = fd::load_run_config(config_path);
    const fd::ExperimentKind requested = fd::parse_experiment_kind(experiment);
    if (requested != config.experiment) {
      throw fd::ConfigError("command line asks for '" + experiment + "' but the config describes '" +
                            std::string(fd::to_string(config.experiment)) + "'");
    }
    if (seed) config.seeds = {*seed};
    if (out_dir) config.output_dir = *out_dir;

    fd::RunOptions options;
    options.verbose = verbose;
    options.log = &std::cerr;
    const fd::ExperimentResult result = fd::run_experiment(config, options);
    if (result.exit_code == fd::kExitVerificationFailure) {
      std::cerr << "verification failed; see " << config.output_dir << "/report.json\n";
    } else if (verbose) {
      std::cerr << "wrote " << result.files.size() << " files to " << config.output_dir << '\n';
    }
    return result.exit_code;
  } catch (const fd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return fd::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fd::kExitVerificationFailure;
  }
}
