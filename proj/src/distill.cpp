// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowdistill/errors.hpp"

namespace flowdistill {

namespace {

struct Residual {
  Vector x_t;
  Vector guided;
  Vector value;
};

Residual residual_at(ConstSpan theta, ConstSpan eps, double t, const MixtureOracle& oracle,
                     const GuidanceSpec& guidance, const NoiseSchedule& schedule) {
  require_same_size(theta, eps, "residual");
  require_same_size(theta, Vector(oracle.dimension()), "residual (oracle)");
  const AlphaSigma as = alpha_sigma(schedule, t);
  Residual r;
  r.x_t.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) r.x_t[i] = as.alpha * theta[i] + as.sigma * eps[i];
  r.guided = guided_epsilon(oracle, r.x_t, t, schedule, guidance);
  r.value = r.guided;
  if (guidance.mode == GuidanceMode::kNfsd) {
    const Vector negative = epsilon_pred(oracle, r.x_t, t, schedule, *guidance.negative_condition);
    for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] -= negative[i];
  } else {
    for (std::size_t i = 0; i < r.value.size(); ++i) r.value[i] -= eps[i];
  }
  return r;
}

std::size_t clamp_residual(Vector& r, double limit) {
  std::size_t clamped = 0;
  for (double& v : r) {
    if (std::abs(v) > limit) {
      v = std::clamp(v, -limit, limit);
      ++clamped;
    }
  }
  return clamped;
}

double loss_proxy(const AlphaSigma& as, ConstSpan residual) {
  const double n = norm(residual);
  return 0.5 * as.ratio() * n * n;
}

void apply_update(std::span<double> params, ConstSpan grad, const DistillConfig& config, AdamState& state) {
  if (config.optimizer == OptimizerKind::kAdam) {
    const Vector delta = adam_step(state, grad, config.learning_rate, config.adam);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += delta[i];
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
  }
}

}  // namespace

DistillConfig DistillConfig::defaults(DistillMethod method) {
  DistillConfig config;
  config.method = method;
  if (method == DistillMethod::kSds) {
    config.plan.kind = PlanKind::kUniformRandom;
    config.learning_rate = 2e-2;
  }
  return config;
}

double DistillConfig::weight(const AlphaSigma& as) const {
  return weighting == Weighting::kSigmaOverAlpha ? as.ratio() : 1.0;
}

void DistillConfig::validate() const {
  plan.validate();
  guidance.validate();
  adam.validate();
  if (method != DistillMethod::kSds && !plan.is_anneal()) {
    throw ConfigError(std::string(to_string(method)) + " requires an annealed timestep plan, got " +
                      std::string(to_string(plan.kind)));
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(residual_clamp > 0.0)) throw ConfigError("residual clamp must be positive");
}

Vector sds_residual_2d(ConstSpan theta, ConstSpan eps, double t, const MixtureOracle& oracle,
                       const GuidanceSpec& guidance, const NoiseSchedule& schedule) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("sds_residual_2d: t must lie in (0, 1]");
  return residual_at(theta, eps, t, oracle, guidance, schedule).value;
}

Vector fsd_euler_step_2d(ConstSpan clean_s, ConstSpan noise, double s, double t,
                         const MixtureOracle& oracle, const GuidanceSpec& guidance,
                         const NoiseSchedule& schedule) {
  if (!(t < s)) throw OrderingError("fsd_euler_step_2d: requires t < s");
  require_same_size(clean_s, noise, "fsd_euler_step_2d");
  const AlphaSigma as = alpha_sigma(schedule, s);
  const AlphaSigma at = alpha_sigma(schedule, t);
  Vector x_s(clean_s.size());
  for (std::size_t i = 0; i < x_s.size(); ++i) x_s[i] = as.alpha * clean_s[i] + as.sigma * noise[i];
  const Vector eps = guided_epsilon(oracle, x_s, s, schedule, guidance);
  const double dlambda = at.ratio() - as.ratio();
  Vector out(clean_s.begin(), clean_s.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += dlambda * (eps[i] - noise[i]);
  return out;
}

Vector clean_matching_noise(ConstSpan noise, double t, const NoiseSchedule& schedule) {
  const AlphaSigma as = alpha_sigma(schedule, t);
  // (1 - sigma) / alpha written without the cancellation in 1 - sigma.
  const double scale = as.alpha / (1.0 + as.sigma);
  Vector out(noise.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * noise[i];
  return out;
}

Distill2dResult run_distill_2d(ConstSpan theta0, const DistillConfig& config,
                               const MixtureOracle& oracle, const NoiseSchedule& schedule,
                               std::uint64_t seed, std::optional<Vector> fixed_noise) {
  config.validate();
  schedule.validate();
  config.guidance.validate_against(oracle);
  require_same_size(theta0, Vector(oracle.dimension()), "run_distill_2d");
  const bool fresh = config.method == DistillMethod::kSds;
  if (fresh && fixed_noise) throw ConfigError("sds draws fresh noise per iteration; fixed noise given");

  Distill2dResult result;
  if (!fresh) {
    if (fixed_noise) {
      require_same_size(*fixed_noise, theta0, "run_distill_2d fixed noise");
      result.fixed_noise = std::move(*fixed_noise);
    } else {
      result.fixed_noise.resize(theta0.size());
      RandomStream(seed, Stream::kInitialNoise).fill_normal(result.fixed_noise);
    }
  }

  RandomStream time_rng(seed, Stream::kTimestep);
  RandomStream noise_rng(seed, Stream::kFreshNoise);
  AdamState state(theta0.size());
  Vector theta(theta0.begin(), theta0.end());
  Vector eps(theta.size());
  const std::int64_t tau_end = config.iterations();
  const bool euler = config.method == DistillMethod::kFsdEuler;
  double t = anneal_t(config.plan, 0, time_rng);

  result.log.reserve(static_cast<std::size_t>(tau_end) + 1);
  result.states.reserve(static_cast<std::size_t>(tau_end) + 1);
  for (std::int64_t tau = 0; tau <= tau_end; ++tau) {
    if (tau > 0 && !euler) t = anneal_t(config.plan, tau, time_rng);
    if (fresh) {
      noise_rng.fill_normal(eps);
    } else {
      eps = result.fixed_noise;
    }
    const AlphaSigma as = alpha_sigma(schedule, t);
    Residual r = residual_at(theta, eps, t, oracle, config.guidance, schedule);

    result.states.push_back({theta, x0_estimate(r.x_t, r.guided, t, schedule)});
    result.log.push_back({tau, t, loss_proxy(as, r.value), norm(r.value), norm(theta)});

    if (euler) {
      if (tau == tau_end) break;
      const double t_next = anneal_t(config.plan, tau + 1, time_rng);
      const double dlambda = alpha_sigma(schedule, t_next).ratio() - as.ratio();
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += dlambda * (r.guided[i] - eps[i]);
      t = t_next;
      continue;
    }

    result.clamped_elements += clamp_residual(r.value, config.residual_clamp);
    const double w = config.weight(as);
    for (double& v : r.value) v *= w;
    apply_update(theta, r.value, config, state);
  }
  result.theta = std::move(theta);
  return result;
}

Distill3dResult run_distill_3d(VoxelScene scene, const DistillConfig& config, const NoiseField& field,
                               const CameraSampler& cameras, const RenderSettings& render_settings,
                               const MixtureOracle& oracle, const NoiseSchedule& schedule,
                               std::uint64_t seed, const SceneCallback& on_iteration) {
  config.validate();
  schedule.validate();
  cameras.validate();
  render_settings.validate();
  config.guidance.validate_against(oracle);
  if (config.method == DistillMethod::kFsdEuler) {
    throw ConfigError("fsd-euler has no rendered-parameter form; use fsd or sds for 3D");
  }
  const std::size_t image_size = 3 * render_settings.pixels();
  if (oracle.dimension() != image_size) {
    throw ConfigError("oracle dimension " + std::to_string(oracle.dimension()) +
                      " does not match rendered image size " + std::to_string(image_size));
  }
  const PatchShape& patch = patch_of(field);
  if (patch.channels != 3 || patch.height != render_settings.height || patch.width != render_settings.width) {
    throw ConfigError("noise field patch shape does not match the rendered image");
  }
  const bool iid = std::holds_alternative<IidNoise>(field);
  if (config.method == DistillMethod::kSds && !iid) {
    throw ConfigError("sds requires the iid noise source");
  }
  if (config.method == DistillMethod::kFsd && iid) {
    throw ConfigError("fsd requires a deterministic noise field (world-map or constant)");
  }

  RandomStream camera_rng(seed, Stream::kCamera);
  RandomStream time_rng(seed, Stream::kTimestep);
  RandomStream noise_rng(seed, Stream::kFreshNoise);
  AdamState state(scene.params().size());

  Distill3dResult result{scene, {}, 0};
  VoxelScene& current = result.scene;
  const std::int64_t tau_end = config.iterations();
  result.log.reserve(static_cast<std::size_t>(tau_end) + 1);
  for (std::int64_t tau = 0; tau <= tau_end; ++tau) {
    const Camera camera = cameras.sample(camera_rng);
    const double t = anneal_t(config.plan, tau, time_rng);
    const AlphaSigma as = alpha_sigma(schedule, t);
    const RenderOutput rendered = render(current, camera, render_settings);
    const Vector eps = query_noise(field, camera, rendered.mask, noise_rng);
    Residual r = residual_at(rendered.image, eps, t, oracle, config.guidance, schedule);

    result.log.push_back({tau, t, loss_proxy(as, r.value), norm(r.value), norm(current.params())});
    result.clamped_elements += clamp_residual(r.value, config.residual_clamp);
    const double w = config.weight(as);
    for (double& v : r.value) v *= w;
    const Vector grad = render_vjp(current, camera, render_settings, r.value);
    apply_update(current.params(), grad, config, state);
    if (on_iteration) on_iteration(tau, current);
  }
  return result;
}

std::string_view to_string(DistillMethod method) {
  switch (method) {
    case DistillMethod::kSds: return "sds";
    case DistillMethod::kFsd: return "fsd";
    case DistillMethod::kFsdEuler: return "fsd-euler";
  }
  return "";
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::kConstantOne ? "constant-one" : "sigma-over-alpha";
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "plain-gradient";
}

DistillMethod parse_distill_method(std::string_view name) {
  if (name == "sds") return DistillMethod::kSds;
  if (name == "fsd") return DistillMethod::kFsd;
  if (name == "fsd-euler") return DistillMethod::kFsdEuler;
  throw ConfigError("unknown distillation method '" + std::string(name) + "'");
}

Weighting parse_weighting(std::string_view name) {
  if (name == "constant-one") return Weighting::kConstantOne;
  if (name == "sigma-over-alpha") return Weighting::kSigmaOverAlpha;
  throw ConfigError("unknown weighting '" + std::string(name) + "'");
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "plain-gradient") return OptimizerKind::kPlainGradient;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

}  // namespace flowdistill
