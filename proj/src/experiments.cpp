// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flowdistill/distill.hpp"
#include "flowdistill/ensemble.hpp"
#include "flowdistill/errors.hpp"
#include "flowdistill/io.hpp"
#include "flowdistill/sampler.hpp"
#include "flowdistill/scene.hpp"

namespace flowdistill {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Context {
 public:
  Context(const RunConfig& config, const RunOptions& options, ExperimentResult& result)
      : config(config), options(options), result(result), out_dir(config.output_dir) {}

  fs::path file(const std::string& name) {
    const fs::path p = out_dir / name;
    result.files.push_back(p);
    return p;
  }

  fs::path tensor_stem(const std::string& name) {
    const fs::path stem = out_dir / name;
    result.files.push_back(tensor_blob_path(stem));
    result.files.push_back(tensor_sidecar_path(stem));
    return stem;
  }

  void info(const std::string& message) const {
    if (options.verbose && options.log) *options.log << message << '\n';
  }

  void warn(const std::string& message) const {
    if (options.log) *options.log << "warning: " << message << '\n';
  }

  const RunConfig& config;
  const RunOptions& options;
  ExperimentResult& result;
  fs::path out_dir;
};

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::vector<std::string> dim_header(std::initializer_list<const char*> lead, std::size_t dims) {
  std::vector<std::string> header(lead.begin(), lead.end());
  for (std::size_t d = 0; d < dims; ++d) header.push_back("dim" + std::to_string(d));
  return header;
}

void state_row(CsvWriter& csv, std::int64_t step, double t, const char* var, ConstSpan v) {
  std::vector<std::string> row{std::to_string(step), format_double(t), var};
  for (double x : v) row.push_back(format_double(x));
  csv.row(row);
}

void write_log_csv(const fs::path& path, const std::vector<IterationLog>& log) {
  CsvWriter csv(path, {"tau", "t", "loss_proxy", "residual_norm", "theta_norm"});
  for (const IterationLog& e : log) {
    csv.row({std::to_string(e.tau), format_double(e.t), format_double(e.loss_proxy),
             format_double(e.residual_norm), format_double(e.theta_norm)});
  }
}

Vector initial_noise(std::uint64_t seed, std::size_t dims) {
  Vector v(dims);
  RandomStream(seed, Stream::kInitialNoise).fill_normal(v);
  return v;
}

json ensemble_json(const std::vector<Vector>& endpoints, const MixtureOracle& oracle) {
  if (endpoints.size() < 2) return nullptr;
  return ensemble_diversity(endpoints, oracle).to_json();
}

void warn_clamped(Context& ctx, const std::string& tag, std::size_t clamped) {
  if (clamped > 0) {
    ctx.warn(tag + ": " + std::to_string(clamped) + " residual elements clamped to +/-" +
             format_double(ctx.config.distill.residual_clamp));
  }
}

int run_ddim_sample(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const MixtureOracle oracle = build_oracle(cfg);
  std::vector<Vector> endpoints;
  json samples = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const Trajectory traj = ddim_trajectory(initial_noise(seed, oracle.dimension()), cfg.sampler, oracle,
                                            cfg.distill.guidance, cfg.schedule);
    CsvWriter csv(ctx.file("trajectory_" + seed_tag(seed) + ".csv"),
                  dim_header({"step", "t", "var"}, oracle.dimension()));
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
      const TrajectoryRecord& r = traj.records[k];
      const auto step = static_cast<std::int64_t>(k);
      state_row(csv, step, r.t, "x", r.x);
      state_row(csv, step, r.t, "x_clean", r.x_clean);
      state_row(csv, step, r.t, "x_gt", r.x_gt);
    }
    endpoints.push_back(traj.sample());
    samples.push_back({{"seed", seed}, {"initial_noise", traj.initial_noise}, {"sample", traj.sample()}});
    ctx.info("ddim-sample " + seed_tag(seed) + " done");
  }
  ctx.result.report["samples"] = samples;
  ctx.result.report["ensemble"] = ensemble_json(endpoints, oracle);
  return kExitSuccess;
}

int run_distill_2d_experiment(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const MixtureOracle oracle = build_oracle(cfg);
  const Vector theta0 = cfg.theta_init.value_or(Vector(oracle.dimension(), 0.0));
  std::vector<Vector> endpoints;
  json runs = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const Distill2dResult res = run_distill_2d(theta0, cfg.distill, oracle, cfg.schedule, seed);
    const std::string tag = seed_tag(seed);
    write_log_csv(ctx.file("log_" + tag + ".csv"), res.log);
    CsvWriter csv(ctx.file("states_" + tag + ".csv"), dim_header({"tau", "t", "var"}, oracle.dimension()));
    for (std::size_t k = 0; k < res.states.size(); ++k) {
      state_row(csv, res.log[k].tau, res.log[k].t, "theta", res.states[k].theta);
      state_row(csv, res.log[k].tau, res.log[k].t, "x_gt", res.states[k].x_gt);
    }
    write_tensor(ctx.tensor_stem("theta_" + tag), res.theta, {res.theta.size()});
    warn_clamped(ctx, tag, res.clamped_elements);
    endpoints.push_back(res.theta);
    runs.push_back({{"seed", seed},
                    {"theta", res.theta},
                    {"fixed_noise", res.fixed_noise},
                    {"final_loss_proxy", res.log.back().loss_proxy},
                    {"clamped_elements", res.clamped_elements}});
    ctx.info("distill-2d " + tag + " done");
  }
  ctx.result.report["runs"] = runs;
  ctx.result.report["ensemble"] = ensemble_json(endpoints, oracle);
  return kExitSuccess;
}

Vector mean_rendering(const VoxelScene& scene, const std::vector<Camera>& views, const RenderSettings& settings) {
  Vector mean(3 * settings.pixels(), 0.0);
  for (const Camera& cam : views) {
    const RenderOutput out = render(scene, cam, settings);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += out.image[k] / static_cast<double>(views.size());
  }
  return mean;
}

int run_distill_3d_experiment(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const MixtureOracle oracle = build_oracle(cfg);
  const PatchShape patch{3, cfg.render.height, cfg.render.width};
  const std::vector<Camera> views = held_out_cameras(cfg.cameras, cfg.scene.held_out_views);
  const std::size_t pixels = cfg.render.pixels();

  std::vector<Vector> endpoints;
  json runs = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const std::string tag = seed_tag(seed);
    const NoiseField field = make_noise_field(cfg.effective_noise_field(), patch, seed);
    VoxelScene scene0(cfg.scene.resolution, cfg.scene.background, cfg.scene.density_init, cfg.scene.color_init);
    SceneCallback snapshot;
    if (cfg.snapshot_every > 0) {
      snapshot = [&](std::int64_t tau, const VoxelScene& scene) {
        if ((tau + 1) % cfg.snapshot_every != 0) return;
        const RenderOutput out = render(scene, views.front(), cfg.render);
        write_ppm(ctx.file("snapshot_" + tag + "_tau" + std::to_string(tau + 1) + ".ppm"), out.image, 3,
                  out.height, out.width);
      };
    }
    const Distill3dResult res = run_distill_3d(std::move(scene0), cfg.distill, field, cfg.cameras, cfg.render,
                                               oracle, cfg.schedule, seed, snapshot);
    write_log_csv(ctx.file("log_" + tag + ".csv"), res.log);
    save_scene(res.scene, ctx.tensor_stem("scene_" + tag));
    for (std::size_t v = 0; v < views.size(); ++v) {
      const RenderOutput out = render(res.scene, views[v], cfg.render);
      write_ppm(ctx.file("view_" + tag + "_" + std::to_string(v) + ".ppm"), out.image, 3, out.height, out.width);
    }
    warn_clamped(ctx, tag, res.clamped_elements);

    const Vector mean = mean_rendering(res.scene, views, cfg.render);
    Rgb channel_mean{};
    for (int c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < pixels; ++p) channel_mean[c] += mean[c * pixels + p] / static_cast<double>(pixels);
    }
    const bool red = channel_mean[0] > channel_mean[2];
    endpoints.push_back(mean);
    runs.push_back({{"seed", seed},
                    {"mean_rgb", channel_mean},
                    {"dominant", red ? "red" : "blue"},
                    {"nearest_component", nearest_component(mean, oracle)},
                    {"final_loss_proxy", res.log.back().loss_proxy},
                    {"clamped_elements", res.clamped_elements}});
    ctx.info("distill-3d " + tag + " done: mean rgb " + format_double(channel_mean[0]) + " " +
             format_double(channel_mean[1]) + " " + format_double(channel_mean[2]));
  }

  // Spread of the held-out mean renderings around their seed average,
  // as root-mean-square per image element.
  Vector centre(3 * pixels, 0.0);
  for (const Vector& e : endpoints) {
    for (std::size_t k = 0; k < centre.size(); ++k) centre[k] += e[k] / static_cast<double>(endpoints.size());
  }
  double max_rms = 0.0;
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const double rms = distance(endpoints[i], centre) / std::sqrt(static_cast<double>(centre.size()));
    runs[i]["rms_to_seed_mean"] = rms;
    max_rms = std::max(max_rms, rms);
  }
  ctx.result.report["runs"] = runs;
  ctx.result.report["max_rms_to_seed_mean"] = max_rms;
  ctx.result.report["ensemble"] = ensemble_json(endpoints, oracle);
  return kExitSuccess;
}

int run_verify_prop1(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const MixtureOracle oracle = build_oracle(cfg);
  DistillConfig euler = cfg.distill;
  euler.method = DistillMethod::kFsdEuler;

  double worst = 0.0;
  json per_seed = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const Vector noise = initial_noise(seed, oracle.dimension());
    const Vector clean0 = clean_matching_noise(noise, euler.plan.t_start, cfg.schedule);
    const Distill2dResult res = run_distill_2d(clean0, euler, oracle, cfg.schedule, seed, noise);

    CsvWriter csv(ctx.file("prop1_" + seed_tag(seed) + ".csv"), {"step", "t", "rel_err"});
    Vector x = noise;
    double seed_worst = 0.0;
    for (std::size_t k = 0; k < res.states.size(); ++k) {
      const double t = res.log[k].t;
      const AlphaSigma as = alpha_sigma(cfg.schedule, t);
      Vector reconstructed(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        reconstructed[i] = as.alpha * res.states[k].theta[i] + as.sigma * noise[i];
      }
      const double err = relative_error(reconstructed, x, 1e-300);
      seed_worst = std::max(seed_worst, err);
      csv.row({std::to_string(k), format_double(t), format_double(err)});
      if (k + 1 < res.states.size()) x = ddim_step(x, t, res.log[k + 1].t, oracle, cfg.distill.guidance, cfg.schedule);
    }
    worst = std::max(worst, seed_worst);
    per_seed.push_back({{"seed", seed}, {"steps", res.states.size() - 1}, {"max_rel_err", seed_worst}});
    ctx.info("verify-prop1 " + seed_tag(seed) + " max rel err " + format_double(seed_worst));
  }
  const bool passed = worst <= cfg.verify_tolerance;
  ctx.result.report["per_seed"] = per_seed;
  ctx.result.report["max_rel_err"] = worst;
  ctx.result.report["tolerance"] = cfg.verify_tolerance;
  ctx.result.report["passed"] = passed;
  return passed ? kExitSuccess : kExitVerificationFailure;
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1]) return false;
  }
  return true;
}

int run_noise_stats(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const PatchShape patch{3, cfg.render.height, cfg.render.width};
  const double extent = cfg.noise_field ? cfg.noise_field->theta_extent : NoiseFieldConfig{}.theta_extent;
  const std::vector<std::uint8_t> mask = disk_mask(patch, cfg.probe.foreground_radius);
  const std::uint64_t seed = cfg.seeds.front();
  constexpr double kMeanBound = 0.05;
  constexpr double kVarLo = 0.9;
  constexpr double kVarHi = 1.1;

  bool passed = true;
  json marginals = json::array();
  for (std::size_t b = 0; b < cfg.probe.betas.size(); ++b) {
    const double beta = cfg.probe.betas[b];
    RandomStream rng(seed, Stream::kProbe, static_cast<std::uint32_t>(b));
    const MarginalStats s =
        marginal_stats_probe(WorldMapSpec{patch, extent, beta}, cfg.cameras, cfg.probe.views, mask, rng);
    const bool ok = s.max_abs_mean <= kMeanBound && s.min_variance >= kVarLo && s.max_variance <= kVarHi;
    passed = passed && ok;
    marginals.push_back({{"beta", beta},
                         {"views", s.views},
                         {"max_abs_mean", s.max_abs_mean},
                         {"min_variance", s.min_variance},
                         {"max_variance", s.max_variance},
                         {"adjacent_correlation", s.adjacent_correlation},
                         {"mean", s.mean},
                         {"variance", s.variance},
                         {"within_bounds", ok}});
    ctx.info("noise-stats beta=" + format_double(beta) + " max|mean| " + format_double(s.max_abs_mean) +
             " variance [" + format_double(s.min_variance) + ", " + format_double(s.max_variance) + "]");
  }

  // Correlation against azimuth offset, averaged over base cameras.
  const int points = cfg.probe.dphi_points;
  std::vector<double> dphi(points);
  for (int k = 0; k < points; ++k) dphi[k] = cfg.probe.dphi_max * k / (points - 1);
  RandomStream cam_rng(seed, Stream::kProbe, 1000);
  std::vector<Camera> bases;
  for (int i = 0; i < cfg.probe.base_cameras; ++i) bases.push_back(cfg.cameras.sample(cam_rng));

  json decay = json::array();
  for (std::size_t b = 0; b < cfg.probe.betas.size(); ++b) {
    const NoiseField world = WorldMapNoise(patch, extent, cfg.probe.betas[b], seed);
    const NoiseField constant = ConstantNoise(patch, seed);
    std::vector<double> corr(points, 0.0), constant_corr(points, 0.0);
    for (int k = 0; k < points; ++k) {
      for (const Camera& a : bases) {
        Camera other = a;
        other.phi = std::fmod(a.phi + dphi[k], 2.0 * std::numbers::pi);
        corr[k] += overlap_alignment_probe(world, a, other).correlation / bases.size();
        constant_corr[k] += overlap_alignment_probe(constant, a, other).correlation / bases.size();
      }
    }
    const bool monotone = non_increasing(corr);
    passed = passed && monotone;
    decay.push_back({{"beta", cfg.probe.betas[b]},
                     {"dphi", dphi},
                     {"world_map_correlation", corr},
                     {"constant_correlation", constant_corr},
                     {"non_increasing", monotone}});
  }

  ctx.result.report["theta_extent"] = extent;
  ctx.result.report["bounds"] = {{"max_abs_mean", kMeanBound}, {"variance", {kVarLo, kVarHi}}};
  ctx.result.report["marginals"] = marginals;
  ctx.result.report["correlation_decay"] = decay;
  ctx.result.report["passed"] = passed;
  return passed ? kExitSuccess : kExitVerificationFailure;
}

int run_rplus_check(Context& ctx) {
  const RunConfig& cfg = ctx.config;
  const PatchShape patch{3, cfg.render.height, cfg.render.width};
  Camera cam;
  cam.fov = cfg.cameras.fov;
  cam.radius = cfg.cameras.radius;
  cam.theta = cfg.rplus.theta_cam;
  cam.phi = 0.0;

  bool passed = true;
  json rows = json::array();
  for (double extent : cfg.rplus.theta_extents) {
    const AlignmentRadius formula = r_plus(cam, extent);
    const double sim_theta = simulate_alignment_radius(cam, patch, extent, AlignmentAxis::kPolar);
    const double sim_phi = simulate_alignment_radius(cam, patch, extent, AlignmentAxis::kAzimuth);
    const double err_theta = std::abs(sim_theta - formula.r_theta) / formula.r_theta;
    const double err_phi = std::abs(sim_phi - formula.r_phi) / formula.r_phi;
    const bool ok = err_theta <= cfg.rplus.tolerance && err_phi <= cfg.rplus.tolerance;
    passed = passed && ok;
    rows.push_back({{"theta_extent", extent},
                    {"r_theta_formula", formula.r_theta},
                    {"r_theta_simulated", sim_theta},
                    {"r_theta_rel_err", err_theta},
                    {"r_phi_formula", formula.r_phi},
                    {"r_phi_simulated", sim_phi},
                    {"r_phi_rel_err", err_phi},
                    {"within_tolerance", ok}});
    ctx.info("rplus-check extent " + format_double(extent) + " rel err " + format_double(err_theta) + " / " +
             format_double(err_phi));
  }
  ctx.result.report["camera"] = {{"fov", cam.fov}, {"radius", cam.radius}, {"theta", cam.theta}};
  ctx.result.report["tolerance"] = cfg.rplus.tolerance;
  ctx.result.report["results"] = rows;
  ctx.result.report["passed"] = passed;
  return passed ? kExitSuccess : kExitVerificationFailure;
}

}  // namespace

NoiseField make_noise_field(const NoiseFieldConfig& config, const PatchShape& patch, std::uint64_t seed) {
  switch (config.kind) {
    case NoiseFieldKind::kWorldMap: return WorldMapNoise(patch, config.theta_extent, config.beta, seed);
    case NoiseFieldKind::kConstant: return ConstantNoise(patch, seed);
    case NoiseFieldKind::kIid: return IidNoise(patch);
  }
  throw ConfigError("unknown noise field kind");
}

std::vector<Camera> held_out_cameras(const CameraSampler& sampler, int count) {
  std::vector<Camera> cams;
  for (int k = 0; k < count; ++k) {
    Camera c;
    c.fov = sampler.fov;
    c.radius = sampler.radius;
    c.theta = 0.5 * (sampler.theta_min + sampler.theta_max);
    c.phi = 2.0 * std::numbers::pi * (k + 0.5) / count;
    cams.push_back(c);
  }
  return cams;
}

std::vector<std::uint8_t> disk_mask(const PatchShape& patch, double radius) {
  std::vector<std::uint8_t> mask(patch.pixels(), 0);
  for (int i = 0; i < patch.height; ++i) {
    for (int j = 0; j < patch.width; ++j) {
      const double y = 2.0 * (i + 0.5) / patch.height - 1.0;
      const double x = 2.0 * (j + 0.5) / patch.width - 1.0;
      mask[static_cast<std::size_t>(i) * patch.width + j] = std::hypot(x, y) <= radius ? 1 : 0;
    }
  }
  return mask;
}

ExperimentResult run_experiment(const RunConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentResult result;
  Context ctx(config, options, result);
  fs::create_directories(ctx.out_dir);
  result.report = {{"experiment", to_string(config.experiment)}, {"seeds", config.seeds}};

  switch (config.experiment) {
    case ExperimentKind::kDdimSample: result.exit_code = run_ddim_sample(ctx); break;
    case ExperimentKind::kDistill2d: result.exit_code = run_distill_2d_experiment(ctx); break;
    case ExperimentKind::kDistill3d: result.exit_code = run_distill_3d_experiment(ctx); break;
    case ExperimentKind::kVerifyProp1: result.exit_code = run_verify_prop1(ctx); break;
    case ExperimentKind::kNoiseStats: result.exit_code = run_noise_stats(ctx); break;
    case ExperimentKind::kRplusCheck: result.exit_code = run_rplus_check(ctx); break;
  }
  write_json(ctx.file("config.json"), to_json(config));
  write_json(ctx.file("report.json"), result.report);
  return result;
}

}  // namespace flowdistill
