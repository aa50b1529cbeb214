// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowdistill/config.hpp"

#include <set>

#include "flowdistill/errors.hpp"
#include "flowdistill/io.hpp"

namespace flowdistill {

using nlohmann::json;

namespace {

// Reads an object's keys, rejecting any key that is never asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return convert<T>(key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return convert<T>(key);
  }

  const json* object(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

NoiseSchedule schedule_from(const json& j) {
  Fields f(j, "schedule");
  NoiseSchedule s;
  s.kind = parse_schedule_kind(f.get<std::string>("kind", std::string(to_string(s.kind))));
  s.beta_min = f.get("beta_min", s.beta_min);
  s.beta_max = f.get("beta_max", s.beta_max);
  s.cosine_offset = f.get("cosine_offset", s.cosine_offset);
  f.finish();
  return s;
}

json to_json(const NoiseSchedule& s) {
  return {{"kind", to_string(s.kind)}, {"beta_min", s.beta_min}, {"beta_max", s.beta_max},
          {"cosine_offset", s.cosine_offset}};
}

OracleConfig oracle_from(const json& j) {
  Fields f(j, "oracle");
  OracleConfig o;
  if (const json* comps = f.object("components")) {
    if (!comps->is_array()) throw ConfigError("oracle.components: expected an array");
    for (std::size_t i = 0; i < comps->size(); ++i) {
      Fields c((*comps)[i], "oracle.components[" + std::to_string(i) + "]");
      ComponentConfig cc;
      cc.weight = c.get("weight", cc.weight);
      cc.stddev = c.get("stddev", cc.stddev);
      cc.mean = c.optional<Vector>("mean");
      cc.fill = c.optional<Vector>("fill");
      cc.mean_file = c.optional<std::string>("mean_file");
      c.finish();
      o.components.push_back(std::move(cc));
    }
  }
  o.conditions = f.get("conditions", o.conditions);
  f.finish();
  return o;
}

json to_json(const OracleConfig& o) {
  json comps = json::array();
  for (const ComponentConfig& c : o.components) {
    json jc = {{"weight", c.weight}, {"stddev", c.stddev}};
    if (c.mean) jc["mean"] = *c.mean;
    if (c.fill) jc["fill"] = *c.fill;
    if (c.mean_file) jc["mean_file"] = *c.mean_file;
    comps.push_back(std::move(jc));
  }
  return {{"components", comps}, {"conditions", o.conditions}};
}

SamplerGrid sampler_from(const json& j) {
  Fields f(j, "sampler");
  SamplerGrid g;
  g.steps = f.get("steps", g.steps);
  g.t_start = f.get("t_start", g.t_start);
  g.t_end = f.get("t_end", g.t_end);
  f.finish();
  return g;
}

GuidanceSpec guidance_from(const json& j) {
  Fields f(j, "distill.guidance");
  GuidanceSpec g;
  g.mode = parse_guidance_mode(f.get<std::string>("mode", std::string(to_string(g.mode))));
  g.scale = f.get("scale", g.scale);
  g.condition = f.get("condition", g.condition);
  g.negative_condition = f.optional<std::string>("negative_condition");
  f.finish();
  return g;
}

json to_json(const GuidanceSpec& g) {
  json j = {{"mode", to_string(g.mode)}, {"scale", g.scale}, {"condition", g.condition}};
  j["negative_condition"] = g.negative_condition ? json(*g.negative_condition) : json(nullptr);
  return j;
}

DistillConfig distill_from(const json& j) {
  Fields f(j, "distill");
  const DistillMethod method = parse_distill_method(f.get<std::string>("method", "fsd"));
  DistillConfig d = DistillConfig::defaults(method);
  if (const json* p = f.object("plan")) {
    Fields pf(*p, "distill.plan");
    d.plan.kind = parse_plan_kind(pf.get<std::string>("kind", std::string(to_string(d.plan.kind))));
    d.plan.iterations = pf.get("iterations", d.plan.iterations);
    d.plan.t_start = pf.get("t_start", d.plan.t_start);
    d.plan.t_end = pf.get("t_end", d.plan.t_end);
    pf.finish();
  }
  if (const json* g = f.object("guidance")) d.guidance = guidance_from(*g);
  d.weighting = parse_weighting(f.get<std::string>("weighting", std::string(to_string(d.weighting))));
  d.learning_rate = f.get("learning_rate", d.learning_rate);
  d.optimizer = parse_optimizer(f.get<std::string>("optimizer", std::string(to_string(d.optimizer))));
  if (const json* a = f.object("adam")) {
    Fields af(*a, "distill.adam");
    d.adam.beta1 = af.get("beta1", d.adam.beta1);
    d.adam.beta2 = af.get("beta2", d.adam.beta2);
    d.adam.eps = af.get("eps", d.adam.eps);
    af.finish();
  }
  d.residual_clamp = f.get("residual_clamp", d.residual_clamp);
  f.finish();
  return d;
}

json to_json(const DistillConfig& d) {
  return {{"method", to_string(d.method)},
          {"plan",
           {{"kind", to_string(d.plan.kind)},
            {"iterations", d.plan.iterations},
            {"t_start", d.plan.t_start},
            {"t_end", d.plan.t_end}}},
          {"guidance", to_json(d.guidance)},
          {"weighting", to_string(d.weighting)},
          {"learning_rate", d.learning_rate},
          {"optimizer", to_string(d.optimizer)},
          {"adam", {{"beta1", d.adam.beta1}, {"beta2", d.adam.beta2}, {"eps", d.adam.eps}}},
          {"residual_clamp", d.residual_clamp}};
}

NoiseFieldConfig noise_field_from(const json& j) {
  Fields f(j, "noise_field");
  NoiseFieldConfig n;
  n.kind = parse_noise_field_kind(f.get<std::string>("kind", std::string(to_string(n.kind))));
  n.theta_extent = f.get("theta_extent", n.theta_extent);
  n.beta = f.get("beta", n.beta);
  f.finish();
  return n;
}

CameraSampler cameras_from(const json& j) {
  Fields f(j, "cameras");
  CameraSampler c;
  c.theta_min = f.get("theta_min", c.theta_min);
  c.theta_max = f.get("theta_max", c.theta_max);
  c.fov = f.get("fov", c.fov);
  c.radius = f.get("radius", c.radius);
  f.finish();
  return c;
}

RenderSettings render_from(const json& j) {
  Fields f(j, "render");
  RenderSettings r;
  r.height = f.get("height", r.height);
  r.width = f.get("width", r.width);
  r.samples_per_ray = f.get("samples_per_ray", r.samples_per_ray);
  r.alpha_threshold = f.get("alpha_threshold", r.alpha_threshold);
  f.finish();
  return r;
}

SceneConfig scene_from(const json& j) {
  Fields f(j, "scene");
  SceneConfig s;
  s.resolution = f.get("resolution", s.resolution);
  s.density_init = f.get("density_init", s.density_init);
  s.color_init = f.get("color_init", s.color_init);
  s.background = f.get("background", s.background);
  s.held_out_views = f.get("held_out_views", s.held_out_views);
  f.finish();
  return s;
}

ProbeConfig probe_from(const json& j) {
  Fields f(j, "probe");
  ProbeConfig p;
  p.views = f.get("views", p.views);
  p.betas = f.get("betas", p.betas);
  p.dphi_points = f.get("dphi_points", p.dphi_points);
  p.dphi_max = f.get("dphi_max", p.dphi_max);
  p.base_cameras = f.get("base_cameras", p.base_cameras);
  p.foreground_radius = f.get("foreground_radius", p.foreground_radius);
  f.finish();
  return p;
}

RplusConfig rplus_from(const json& j) {
  Fields f(j, "rplus");
  RplusConfig r;
  r.theta_extents = f.get("theta_extents", r.theta_extents);
  r.theta_cam = f.get("theta_cam", r.theta_cam);
  r.tolerance = f.get("tolerance", r.tolerance);
  f.finish();
  return r;
}

bool needs_oracle(ExperimentKind kind) {
  return kind == ExperimentKind::kDdimSample || kind == ExperimentKind::kDistill2d ||
         kind == ExperimentKind::kDistill3d || kind == ExperimentKind::kVerifyProp1;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  Fields f(j, "config");
  RunConfig c;
  c.base_dir = base_dir;
  c.experiment = parse_experiment_kind(f.required<std::string>("experiment"));
  if (const json* s = f.object("schedule")) c.schedule = schedule_from(*s);
  if (const json* o = f.object("oracle")) c.oracle = oracle_from(*o);
  if (const json* s = f.object("sampler")) c.sampler = sampler_from(*s);
  if (const json* d = f.object("distill")) c.distill = distill_from(*d);
  c.theta_init = f.optional<Vector>("theta_init");
  if (const json* n = f.object("noise_field"); n && !n->is_null()) c.noise_field = noise_field_from(*n);
  if (const json* s = f.object("cameras")) c.cameras = cameras_from(*s);
  if (const json* s = f.object("render")) c.render = render_from(*s);
  if (const json* s = f.object("scene")) c.scene = scene_from(*s);
  if (const json* s = f.object("probe")) c.probe = probe_from(*s);
  if (const json* s = f.object("rplus")) c.rplus = rplus_from(*s);
  c.verify_tolerance = f.get("verify_tolerance", c.verify_tolerance);
  c.snapshot_every = f.get("snapshot_every", c.snapshot_every);
  c.seeds = f.get("seeds", c.seeds);
  c.output_dir = f.get("output_dir", c.output_dir);
  f.finish();
  return c;
}

json to_json(const RunConfig& c) {
  json j = {
      {"experiment", to_string(c.experiment)},
      {"schedule", to_json(c.schedule)},
      {"oracle", to_json(c.oracle)},
      {"sampler", {{"steps", c.sampler.steps}, {"t_start", c.sampler.t_start}, {"t_end", c.sampler.t_end}}},
      {"distill", to_json(c.distill)},
      {"cameras",
       {{"theta_min", c.cameras.theta_min},
        {"theta_max", c.cameras.theta_max},
        {"fov", c.cameras.fov},
        {"radius", c.cameras.radius}}},
      {"render",
       {{"height", c.render.height},
        {"width", c.render.width},
        {"samples_per_ray", c.render.samples_per_ray},
        {"alpha_threshold", c.render.alpha_threshold}}},
      {"scene",
       {{"resolution", c.scene.resolution},
        {"density_init", c.scene.density_init},
        {"color_init", c.scene.color_init},
        {"background", c.scene.background},
        {"held_out_views", c.scene.held_out_views}}},
      {"probe",
       {{"views", c.probe.views},
        {"betas", c.probe.betas},
        {"dphi_points", c.probe.dphi_points},
        {"dphi_max", c.probe.dphi_max},
        {"base_cameras", c.probe.base_cameras},
        {"foreground_radius", c.probe.foreground_radius}}},
      {"rplus",
       {{"theta_extents", c.rplus.theta_extents},
        {"theta_cam", c.rplus.theta_cam},
        {"tolerance", c.rplus.tolerance}}},
      {"verify_tolerance", c.verify_tolerance},
      {"snapshot_every", c.snapshot_every},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
  };
  if (c.theta_init) j["theta_init"] = *c.theta_init;
  if (c.noise_field) {
    j["noise_field"] = {{"kind", to_string(c.noise_field->kind)},
                        {"theta_extent", c.noise_field->theta_extent},
                        {"beta", c.noise_field->beta}};
  }
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json(path), path.parent_path());
}

bool RunConfig::operator==(const RunConfig& o) const {
  return experiment == o.experiment && schedule == o.schedule && oracle == o.oracle && sampler == o.sampler &&
         distill == o.distill && theta_init == o.theta_init && noise_field == o.noise_field &&
         cameras == o.cameras && render == o.render && scene == o.scene && probe == o.probe &&
         rplus == o.rplus && verify_tolerance == o.verify_tolerance && snapshot_every == o.snapshot_every &&
         seeds == o.seeds && output_dir == o.output_dir;
}

NoiseFieldConfig RunConfig::effective_noise_field() const {
  if (noise_field) return *noise_field;
  NoiseFieldConfig n;
  if (distill.method == DistillMethod::kSds) n.kind = NoiseFieldKind::kIid;
  return n;
}

void RunConfig::validate() const {
  schedule.validate();
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
  if (snapshot_every < 0) throw ConfigError("config: snapshot_every must be >= 0");
  if (needs_oracle(experiment)) {
    if (oracle.components.empty()) {
      throw ConfigError("config: experiment '" + std::string(to_string(experiment)) + "' needs an oracle");
    }
    build_oracle(*this);
  }
  if (noise_field && experiment != ExperimentKind::kDistill3d && experiment != ExperimentKind::kNoiseStats) {
    throw ConfigError("config: noise_field (including beta mixing) applies only to 3D noise fields; "
                      "remove it for experiment '" + std::string(to_string(experiment)) + "'");
  }
  if (theta_init && experiment != ExperimentKind::kDistill2d) {
    throw ConfigError("config: theta_init applies only to distill-2d");
  }
  if (noise_field) {
    if (!(noise_field->theta_extent > 0.0)) throw ConfigError("noise_field.theta_extent must be positive");
    if (!(noise_field->beta >= 0.0 && noise_field->beta <= 1.0)) {
      throw ConfigError("noise_field.beta must lie in [0, 1]");
    }
  }

  switch (experiment) {
    case ExperimentKind::kDdimSample:
      sampler.validate();
      break;
    case ExperimentKind::kDistill2d:
      distill.validate();
      if (theta_init && theta_init->size() != build_oracle(*this).dimension()) {
        throw ConfigError("config: theta_init dimension does not match the oracle");
      }
      break;
    case ExperimentKind::kDistill3d: {
      distill.validate();
      render.validate();
      cameras.validate();
      if (scene.resolution < 2) throw ConfigError("scene.resolution must be >= 2");
      if (scene.held_out_views < 1) throw ConfigError("scene.held_out_views must be >= 1");
      const NoiseFieldConfig nf = effective_noise_field();
      if (distill.method == DistillMethod::kSds && nf.kind != NoiseFieldKind::kIid) {
        throw ConfigError("config: sds draws fresh noise; noise_field.kind must be iid");
      }
      if (distill.method == DistillMethod::kFsd && nf.kind == NoiseFieldKind::kIid) {
        throw ConfigError("config: fsd needs a deterministic noise field (world-map or constant)");
      }
      if (distill.method == DistillMethod::kFsdEuler) throw ConfigError("config: fsd-euler is 2D only");
      break;
    }
    case ExperimentKind::kVerifyProp1: {
      DistillConfig d = distill;
      d.method = DistillMethod::kFsdEuler;
      d.validate();
      if (!(verify_tolerance > 0.0)) throw ConfigError("verify_tolerance must be positive");
      break;
    }
    case ExperimentKind::kNoiseStats:
      render.validate();
      cameras.validate();
      if (probe.views < 100) throw ConfigError("probe.views must be >= 100");
      if (probe.dphi_points < 2) throw ConfigError("probe.dphi_points must be >= 2");
      if (probe.base_cameras < 1) throw ConfigError("probe.base_cameras must be >= 1");
      for (double b : probe.betas) {
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("probe.betas must lie in [0, 1]");
      }
      break;
    case ExperimentKind::kRplusCheck:
      cameras.validate();
      if (rplus.theta_extents.empty()) throw ConfigError("rplus.theta_extents must not be empty");
      if (!(rplus.tolerance > 0.0)) throw ConfigError("rplus.tolerance must be positive");
      break;
  }
}

MixtureOracle build_oracle(const RunConfig& config) {
  std::vector<MixtureComponent> comps;
  for (std::size_t i = 0; i < config.oracle.components.size(); ++i) {
    const ComponentConfig& cc = config.oracle.components[i];
    const std::string where = "oracle.components[" + std::to_string(i) + "]";
    const int given = static_cast<int>(cc.mean.has_value()) + static_cast<int>(cc.fill.has_value()) +
                      static_cast<int>(cc.mean_file.has_value());
    if (given != 1) throw ConfigError(where + ": exactly one of mean, fill, mean_file is required");
    MixtureComponent mc;
    mc.weight = cc.weight;
    mc.stddev = cc.stddev;
    if (cc.mean) {
      mc.mean = *cc.mean;
    } else if (cc.fill) {
      const std::size_t pixels = config.render.pixels();
      if (cc.fill->empty()) throw ConfigError(where + ": fill must not be empty");
      mc.mean.resize(cc.fill->size() * pixels);
      for (std::size_t ch = 0; ch < cc.fill->size(); ++ch) {
        std::fill_n(mc.mean.begin() + static_cast<std::ptrdiff_t>(ch * pixels), pixels, (*cc.fill)[ch]);
      }
    } else {
      std::filesystem::path stem(*cc.mean_file);
      if (stem.is_relative()) stem = config.base_dir / stem;
      mc.mean = read_tensor(stem);
    }
    comps.push_back(std::move(mc));
  }
  return MixtureOracle(std::move(comps), config.oracle.conditions);
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kDdimSample: return "ddim-sample";
    case ExperimentKind::kDistill2d: return "distill-2d";
    case ExperimentKind::kDistill3d: return "distill-3d";
    case ExperimentKind::kVerifyProp1: return "verify-prop1";
    case ExperimentKind::kNoiseStats: return "noise-stats";
    case ExperimentKind::kRplusCheck: return "rplus-check";
  }
  return "";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (ExperimentKind k : {ExperimentKind::kDdimSample, ExperimentKind::kDistill2d, ExperimentKind::kDistill3d,
                           ExperimentKind::kVerifyProp1, ExperimentKind::kNoiseStats, ExperimentKind::kRplusCheck}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(NoiseFieldKind kind) {
  switch (kind) {
    case NoiseFieldKind::kWorldMap: return "world-map";
    case NoiseFieldKind::kConstant: return "constant";
    case NoiseFieldKind::kIid: return "iid";
  }
  return "";
}

NoiseFieldKind parse_noise_field_kind(std::string_view name) {
  if (name == "world-map") return NoiseFieldKind::kWorldMap;
  if (name == "constant") return NoiseFieldKind::kConstant;
  if (name == "iid") return NoiseFieldKind::kIid;
  throw ConfigError("unknown noise field kind '" + std::string(name) + "'");
}

}  // namespace flowdistill
