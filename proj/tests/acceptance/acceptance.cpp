// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion; exits non-zero
// if any criterion fails. Every threshold lives in this file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "flowdistill/config.hpp"
#include "flowdistill/distill.hpp"
#include "flowdistill/ensemble.hpp"
#include "flowdistill/experiments.hpp"
#include "flowdistill/io.hpp"
#include "flowdistill/sampler.hpp"
#include "flowdistill/scene.hpp"

namespace fd = flowdistill;
namespace fs = std::filesystem;

namespace {

constexpr double kProp1Tolerance = 1e-9;
constexpr double kProp1Seconds = 1.0;
constexpr double kGaussianTolerance = 1e-3;
constexpr double kHalvingLo = 1.5;
constexpr double kHalvingHi = 2.5;
constexpr double kGaussianSeconds = 5.0;
constexpr int kMarginalSeeds = 10000;
constexpr double kProportionTolerance = 0.02;
constexpr double kModeMeanTolerance = 0.05;
constexpr double kMarginalSeconds = 30.0;
constexpr int kDiversitySeeds = 32;
constexpr double kMinModeShare = 0.25;
constexpr double kDispersionRatio = 0.5;
constexpr double kMinClassShare3d = 0.25;
constexpr double kDelta3d = 0.408;
constexpr double kScene3dSeconds = 600.0;
constexpr double kNoiseMeanBound = 0.05;
constexpr double kNoiseVarLo = 0.9;
constexpr double kNoiseVarHi = 1.1;
constexpr int kNoiseViews = 10000;
constexpr int kDecayPoints = 16;
constexpr double kRplusTolerance = 0.1;
constexpr int kVjpChecks = 20;
constexpr double kVjpTolerance = 1e-4;
constexpr double kVjpStep = 1e-4;

const fs::path kConfigs = fs::path(FLOWDISTILL_SOURCE_DIR) / "configs";
const fd::NoiseSchedule kSchedule = fd::NoiseSchedule::linear_beta();

struct Outcome {
  bool passed;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flowdistill_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fd::Vector initial_noise(std::uint64_t seed, std::size_t n) {
  fd::Vector v(n);
  fd::RandomStream(seed, fd::Stream::kInitialNoise).fill_normal(v);
  return v;
}

fd::MixtureOracle symmetric_1d() { return fd::MixtureOracle({{0.5, {-2.0}, 0.1}, {0.5, {2.0}, 0.1}}); }

Outcome criterion_prop1() {
  const auto start = Clock::now();
  const fd::MixtureOracle o({{0.3, {2.0, 0.0}, 0.1}, {0.3, {-1.0, 1.7}, 0.1}, {0.4, {-1.0, -1.7}, 0.1}});
  auto config = fd::DistillConfig::defaults(fd::DistillMethod::kFsdEuler);
  config.plan.iterations = 50;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const fd::Vector noise = initial_noise(seed, 2);
    const auto res = fd::run_distill_2d(fd::clean_matching_noise(noise, config.plan.t_start, kSchedule), config, o,
                                        kSchedule, seed, noise);
    fd::Vector x = noise;
    for (std::size_t k = 0; k < res.states.size(); ++k) {
      const double t = res.log[k].t;
      const auto as = fd::alpha_sigma(kSchedule, t);
      fd::Vector rebuilt(2);
      for (int i = 0; i < 2; ++i) rebuilt[i] = as.alpha * res.states[k].theta[i] + as.sigma * noise[i];
      worst = std::max(worst, fd::relative_error(rebuilt, x));
      if (k + 1 < res.states.size()) x = fd::ddim_step(x, t, res.log[k + 1].t, o, {}, kSchedule);
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= kProp1Tolerance && elapsed < kProp1Seconds,
          "50-step fsd-euler vs DDIM, 4 seeds: max rel err " + num(worst) + " (<= " + num(kProp1Tolerance) +
              "), " + num(elapsed) + " s (< " + num(kProp1Seconds) + " s)"};
}

Outcome criterion_gaussian() {
  const auto start = Clock::now();
  const fd::Vector mu{1.0, -2.0, 0.5};
  const double s = 0.5;
  const fd::MixtureOracle o({{1.0, mu, s}});
  const fd::Vector noise{0.3, -1.1, 0.8};
  const auto a = fd::alpha_sigma(kSchedule, 0.98), b = fd::alpha_sigma(kSchedule, 0.02);
  const double ka = std::sqrt(a.alpha * a.alpha * s * s + a.sigma * a.sigma);
  const double kb = std::sqrt(b.alpha * b.alpha * s * s + b.sigma * b.sigma);
  fd::Vector exact(3);
  for (int i = 0; i < 3; ++i) exact[i] = b.alpha * mu[i] + kb * (noise[i] - a.alpha * mu[i]) / ka;
  auto err = [&](int steps) {
    // The ODE state at t_end, not the denoised estimate.
    return fd::relative_error(fd::ddim_trajectory(noise, {steps, 0.98, 0.02}, o, {}, kSchedule).records.back().x,
                              exact);
  };
  const double e1000 = err(1000), e500 = err(500);
  const double ratio = e500 / e1000;
  const double elapsed = seconds_since(start);
  return {e1000 <= kGaussianTolerance && ratio >= kHalvingLo && ratio <= kHalvingHi && elapsed < kGaussianSeconds,
          "1000-step rel err " + num(e1000) + " (<= " + num(kGaussianTolerance) + "), 500/1000 error ratio " +
              num(ratio) + " (in [" + num(kHalvingLo) + ", " + num(kHalvingHi) + "]), " + num(elapsed) + " s"};
}

Outcome criterion_marginal() {
  const auto start = Clock::now();
  const fd::MixtureOracle o = symmetric_1d();
  int right = 0;
  double sum_left = 0.0, sum_right = 0.0;
  for (int seed = 0; seed < kMarginalSeeds; ++seed) {
    const double x = fd::ddim_trajectory(initial_noise(seed, 1), {}, o, {}, kSchedule).sample()[0];
    if (x > 0.0) {
      ++right;
      sum_right += x;
    } else {
      sum_left += x;
    }
  }
  const int left = kMarginalSeeds - right;
  const double share = static_cast<double>(right) / kMarginalSeeds;
  const double mean_left = sum_left / std::max(left, 1), mean_right = sum_right / std::max(right, 1);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(share - 0.5) <= kProportionTolerance && std::abs(mean_left + 2.0) <= kModeMeanTolerance &&
                  std::abs(mean_right - 2.0) <= kModeMeanTolerance && elapsed < kMarginalSeconds;
  return {ok, std::to_string(kMarginalSeeds) + " DDIM seeds: share at +2 " + num(share) + " (0.5 +/- " +
                  num(kProportionTolerance) + "), mode means " + num(mean_left) + " / " + num(mean_right) +
                  " (within " + num(kModeMeanTolerance) + "), " + num(elapsed) + " s (< " + num(kMarginalSeconds) +
                  " s)"};
}

struct Ensemble2d {
  double dispersion;
  std::vector<std::size_t> histogram;
};

Ensemble2d run_ensemble_2d(fd::DistillMethod method, fd::Weighting weighting) {
  const fd::MixtureOracle o = symmetric_1d();
  auto config = fd::DistillConfig::defaults(method);
  config.weighting = weighting;
  std::vector<fd::Vector> endpoints;
  for (int seed = 0; seed < kDiversitySeeds; ++seed) {
    endpoints.push_back(fd::run_distill_2d(fd::Vector{0.0}, config, o, kSchedule, seed).theta);
  }
  const auto report = fd::ensemble_diversity(endpoints, o);
  return {report.dispersion, report.mode_histogram};
}

Outcome criterion_diversity_2d() {
  const auto fsd = run_ensemble_2d(fd::DistillMethod::kFsd, fd::Weighting::kSigmaOverAlpha);
  const auto sds = run_ensemble_2d(fd::DistillMethod::kSds, fd::Weighting::kSigmaOverAlpha);
  const auto min_share = static_cast<double>(std::min(fsd.histogram[0], fsd.histogram[1])) / kDiversitySeeds;
  const double ratio = sds.dispersion / fsd.dispersion;
  const auto fsd_one = run_ensemble_2d(fd::DistillMethod::kFsd, fd::Weighting::kConstantOne);
  const auto sds_one = run_ensemble_2d(fd::DistillMethod::kSds, fd::Weighting::kConstantOne);
  std::printf("INFO criterion 4: with constant-one weighting the sds/fsd dispersion ratio is %.4g\n",
              sds_one.dispersion / fsd_one.dispersion);
  return {min_share >= kMinModeShare && ratio <= kDispersionRatio,
          std::to_string(kDiversitySeeds) + " seeds, sigma-over-alpha weighting: fsd modes " +
              std::to_string(fsd.histogram[0]) + "/" + std::to_string(fsd.histogram[1]) + " (each >= " +
              num(kMinModeShare) + "), dispersion fsd " + num(fsd.dispersion) + " sds " + num(sds.dispersion) +
              ", ratio " + num(ratio) + " (<= " + num(kDispersionRatio) + ")"};
}

fd::ExperimentResult run_config(const std::string& file, const fs::path& out) {
  fd::RunConfig config = fd::load_run_config(kConfigs / file);
  config.output_dir = out.string();
  return fd::run_experiment(config);
}

Outcome criterion_diversity_3d() {
  const auto start = Clock::now();
  const auto fsd = run_config("distill3d_fsd.json", work_dir("distill3d_fsd"));
  const auto sds = run_config("distill3d_sds.json", work_dir("distill3d_sds"));
  const double elapsed = seconds_since(start);
  int red = 0, blue = 0;
  for (const auto& run : fsd.report["runs"]) (run["dominant"] == "red" ? red : blue)++;
  const double seeds = static_cast<double>(red + blue);
  const double sds_max = sds.report["max_rms_to_seed_mean"].get<double>();
  const bool ok = red / seeds >= kMinClassShare3d && blue / seeds >= kMinClassShare3d && sds_max <= kDelta3d &&
                  elapsed < kScene3dSeconds;
  return {ok, "fsd red/blue " + std::to_string(red) + "/" + std::to_string(blue) + " (each >= " +
                  num(kMinClassShare3d) + "), sds max distance to seed mean " + num(sds_max) + " (<= " +
                  num(kDelta3d) + "), fsd max " + num(fsd.report["max_rms_to_seed_mean"].get<double>()) + ", " +
                  num(elapsed) + " s (< " + num(kScene3dSeconds) + " s)"};
}

Outcome criterion_noise_stats() {
  fd::RunConfig config = fd::load_run_config(kConfigs / "noise_stats.json");
  config.output_dir = work_dir("noise_stats").string();
  config.probe.views = kNoiseViews;
  config.probe.betas = {0.0, 0.5, 1.0};
  config.probe.dphi_points = kDecayPoints;
  const auto result = fd::run_experiment(config);
  bool ok = true;
  double worst_mean = 0.0, min_var = 1e300, max_var = 0.0;
  for (const auto& m : result.report["marginals"]) {
    worst_mean = std::max(worst_mean, m["max_abs_mean"].get<double>());
    min_var = std::min(min_var, m["min_variance"].get<double>());
    max_var = std::max(max_var, m["max_variance"].get<double>());
  }
  ok = worst_mean <= kNoiseMeanBound && min_var >= kNoiseVarLo && max_var <= kNoiseVarHi;
  int monotone = 0, curves = 0;
  for (const auto& d : result.report["correlation_decay"]) {
    const auto corr = d["world_map_correlation"].get<std::vector<double>>();
    ++curves;
    bool mono = corr.size() == static_cast<std::size_t>(kDecayPoints);
    for (std::size_t k = 1; k < corr.size(); ++k) mono = mono && corr[k] <= corr[k - 1];
    monotone += mono;
  }
  ok = ok && monotone == curves && curves == 3;
  return {ok, std::to_string(kNoiseViews) + " views per beta in {0, 0.5, 1}: max |mean| " + num(worst_mean) +
                  " (<= " + num(kNoiseMeanBound) + "), variance [" + num(min_var) + ", " + num(max_var) + "] (in [" +
                  num(kNoiseVarLo) + ", " + num(kNoiseVarHi) + "]), monotone decay " + std::to_string(monotone) +
                  "/" + std::to_string(curves) + " on " + std::to_string(kDecayPoints) + " points"};
}

Outcome criterion_rplus() {
  fd::Camera cam;
  cam.fov = 40.0 * std::numbers::pi / 180.0;
  cam.theta = std::numbers::pi / 2;
  const fd::PatchShape patch{3, 8, 8};
  double worst = 0.0;
  for (double extent : {std::numbers::pi / 3, std::numbers::pi / 2, std::numbers::pi}) {
    const auto r = fd::r_plus(cam, extent);
    const double pol = fd::simulate_alignment_radius(cam, patch, extent, fd::AlignmentAxis::kPolar);
    const double azi = fd::simulate_alignment_radius(cam, patch, extent, fd::AlignmentAxis::kAzimuth);
    worst = std::max({worst, std::abs(pol - r.r_theta) / r.r_theta, std::abs(azi - r.r_phi) / r.r_phi});
  }
  return {worst <= kRplusTolerance, "fov 40 deg, extents pi/3, pi/2, pi, both axes: max rel err " + num(worst) +
                                        " (<= " + num(kRplusTolerance) + ")"};
}

Outcome criterion_vjp() {
  const fd::CameraSampler sampler;
  const fd::RenderSettings settings;
  double worst = 0.0;
  for (int trial = 0; trial < kVjpChecks; ++trial) {
    fd::Vector params(4 * 4 * 4 * 4);
    fd::RandomStream(1000 + trial, fd::Stream::kProbe).fill_normal(params);
    fd::VoxelScene scene(4, {1.0, 1.0, 1.0}, params);
    fd::RandomStream cam_rng(1000 + trial, fd::Stream::kCamera);
    const fd::Camera cam = sampler.sample(cam_rng);
    fd::Vector residual(3 * settings.pixels());
    fd::RandomStream(1000 + trial, fd::Stream::kFreshNoise).fill_normal(residual);
    const fd::Vector grad = fd::render_vjp(scene, cam, settings, residual);
    fd::Vector numeric(grad.size());
    for (std::size_t k = 0; k < grad.size(); ++k) {
      const double keep = scene.params()[k];
      scene.params()[k] = keep + kVjpStep;
      const double up = fd::dot(fd::render(scene, cam, settings).image, residual);
      scene.params()[k] = keep - kVjpStep;
      const double down = fd::dot(fd::render(scene, cam, settings).image, residual);
      scene.params()[k] = keep;
      numeric[k] = (up - down) / (2 * kVjpStep);
    }
    worst = std::max(worst, fd::relative_error(grad, numeric));
  }
  return {worst <= kVjpTolerance, std::to_string(kVjpChecks) + " random 4^3 scenes: max rel err " + num(worst) +
                                      " (<= " + num(kVjpTolerance) + ")"};
}

std::map<fs::path, std::string> snapshot(const fs::path& dir) {
  std::map<fs::path, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), dir)] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return files;
}

Outcome criterion_determinism() {
  const std::vector<std::string> configs{"ddim_sample.json", "distill2d_fsd.json", "distill2d_sds.json",
                                         "verify_prop1.json", "noise_stats.json",  "rplus_check.json",
                                         "distill3d_fsd.json", "distill3d_sds.json"};
  int identical = 0;
  std::size_t files = 0;
  std::string mismatched;
  for (const auto& name : configs) {
    fd::RunConfig config = fd::load_run_config(kConfigs / name);
    // Short 3D and probe runs keep the suite fast; the code paths are unchanged.
    if (config.experiment == fd::ExperimentKind::kDistill3d) {
      config.seeds = {0, 1};
      config.distill.plan.iterations = 200;
      config.snapshot_every = 100;
    }
    if (config.experiment == fd::ExperimentKind::kNoiseStats) config.probe.views = 500;
    const fs::path out = work_dir("rerun");
    config.output_dir = out.string();
    fd::run_experiment(config);
    const auto first = snapshot(out);
    fs::remove_all(out);
    fd::run_experiment(config);
    const auto second = snapshot(out);
    if (first == second && !first.empty()) {
      ++identical;
    } else {
      mismatched += " " + name;
    }
    files += first.size();
  }
  const bool ok = identical == static_cast<int>(configs.size());
  return {ok, std::to_string(identical) + "/" + std::to_string(configs.size()) +
                  " experiments rerun byte-identical over " + std::to_string(files) + " files" +
                  (mismatched.empty() ? "" : "; differing:" + mismatched)};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion_prop1},       {2, criterion_gaussian},    {3, criterion_marginal},
      {4, criterion_diversity_2d}, {5, criterion_diversity_3d}, {6, criterion_noise_stats},
      {7, criterion_rplus},       {8, criterion_vjp},         {9, criterion_determinism}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    Outcome outcome{false, ""};
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    failures += !outcome.passed;
    std::printf("%s criterion %d: %s\n", outcome.passed ? "PASS" : "FAIL", id, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
