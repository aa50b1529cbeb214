// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flowdistill/config.hpp"
#include "flowdistill/distill.hpp"
#include "flowdistill/ensemble.hpp"
#include "flowdistill/errors.hpp"
#include "flowdistill/experiments.hpp"
#include "flowdistill/noise_field.hpp"
#include "flowdistill/rng.hpp"
#include "flowdistill/sampler.hpp"
#include "flowdistill/scene.hpp"

namespace py = pybind11;
using namespace flowdistill;

namespace {

py::array_t<double> array(const Vector& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> matrix(const std::vector<Vector>& rows, std::size_t cols) {
  py::array_t<double> out({rows.size(), cols});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return out;
}

MixtureOracle make_oracle(const std::vector<std::tuple<double, Vector, double>>& components,
                          const std::map<std::string, std::vector<std::size_t>>& conditions) {
  std::vector<MixtureComponent> comps;
  for (const auto& [w, mean, s] : components) comps.push_back({w, mean, s});
  return MixtureOracle(std::move(comps), conditions);
}

GuidanceSpec make_guidance(const std::string& mode, double scale, const std::string& condition,
                           const std::optional<std::string>& negative) {
  GuidanceSpec g;
  g.mode = parse_guidance_mode(mode);
  g.scale = scale;
  g.condition = condition;
  g.negative_condition = negative;
  return g;
}

py::dict render_dict(const RenderOutput& out) {
  py::array_t<double> image({std::size_t{3}, static_cast<std::size_t>(out.height), static_cast<std::size_t>(out.width)});
  std::copy(out.image.begin(), out.image.end(), image.mutable_data());
  py::array_t<double> opacity({static_cast<std::size_t>(out.height), static_cast<std::size_t>(out.width)});
  std::copy(out.opacity.begin(), out.opacity.end(), opacity.mutable_data());
  py::array_t<std::uint8_t> mask({static_cast<std::size_t>(out.height), static_cast<std::size_t>(out.width)});
  std::copy(out.mask.begin(), out.mask.end(), mask.mutable_data());
  py::dict d;
  d["image"] = image;
  d["opacity"] = opacity;
  d["mask"] = mask;
  return d;
}

Camera make_camera(double theta, double phi, double fov, double radius) {
  Camera c;
  c.theta = theta;
  c.phi = phi;
  c.fov = fov;
  c.radius = radius;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_flowdistill, m) {
  m.doc() = "Native core of flowdistill";

  static py::exception<Error> base_exc(m, "FlowDistillError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_exc(m, "ConfigError", base_exc.ptr());
  static py::exception<DomainError> domain_exc(m, "DomainError", base_exc.ptr());
  static py::exception<OrderingError> ordering_exc(m, "OrderingError", base_exc.ptr());
  static py::exception<SingularScoreError> singular_exc(m, "SingularScoreError", base_exc.ptr());
  static py::exception<NumericDegenerateError> degenerate_exc(m, "NumericDegenerateError", base_exc.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_exc, e.what());
    } catch (const DomainError& e) {
      py::set_error(domain_exc, e.what());
    } catch (const OrderingError& e) {
      py::set_error(ordering_exc, e.what());
    } catch (const SingularScoreError& e) {
      py::set_error(singular_exc, e.what());
    } catch (const NumericDegenerateError& e) {
      py::set_error(degenerate_exc, e.what());
    } catch (const Error& e) {
      py::set_error(base_exc, e.what());
    }
  });

  m.def("philox4x32", [](std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
    return Philox4x32::generate(counter, key);
  });
  m.def("normal_draws", [](std::uint64_t seed, std::uint32_t stream, std::size_t n) {
    Vector v(n);
    RandomStream(seed, static_cast<Stream>(stream), 0).fill_normal(v);
    return array(v);
  }, py::arg("seed"), py::arg("stream"), py::arg("n"));

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_static("linear_beta", &NoiseSchedule::linear_beta, py::arg("beta_min") = 0.1, py::arg("beta_max") = 20.0)
      .def_static("cosine", &NoiseSchedule::cosine, py::arg("offset") = 0.008)
      .def_readonly("beta_min", &NoiseSchedule::beta_min)
      .def_readonly("beta_max", &NoiseSchedule::beta_max);
  m.def("alpha_sigma", [](const NoiseSchedule& s, double t) {
    const AlphaSigma as = alpha_sigma(s, t);
    return std::make_pair(as.alpha, as.sigma);
  });
  m.def("ratio_derivative", &ratio_derivative);
  m.def("anneal_t", [](const std::string& kind, std::int64_t iterations, double t_start, double t_end,
                       std::int64_t tau, std::uint64_t seed) {
    TimestepPlan plan{parse_plan_kind(kind), iterations, t_start, t_end};
    plan.validate();
    RandomStream rng(seed, Stream::kTimestep);
    return anneal_t(plan, tau, rng);
  }, py::arg("kind"), py::arg("iterations"), py::arg("t_start"), py::arg("t_end"), py::arg("tau"),
     py::arg("seed") = 0);

  py::class_<MixtureOracle>(m, "MixtureOracle")
      .def(py::init(&make_oracle), py::arg("components"),
           py::arg("conditions") = std::map<std::string, std::vector<std::size_t>>{})
      .def_property_readonly("dimension", &MixtureOracle::dimension)
      .def("epsilon", [](const MixtureOracle& o, const Vector& x, double t, const NoiseSchedule& s,
                         const std::string& condition) { return array(epsilon_pred(o, x, t, s, condition)); },
           py::arg("x_t"), py::arg("t"), py::arg("schedule"), py::arg("condition") = "uncond");

  py::class_<GuidanceSpec>(m, "GuidanceSpec")
      .def(py::init(&make_guidance), py::arg("mode") = "none", py::arg("scale") = 1.0,
           py::arg("condition") = "uncond", py::arg("negative_condition") = std::nullopt);
  m.def("guided_epsilon", [](const MixtureOracle& o, const Vector& x, double t, const NoiseSchedule& s,
                             const GuidanceSpec& g) { return array(guided_epsilon(o, x, t, s, g)); });

  m.def("ddim_step", [](const Vector& x, double s, double t, const MixtureOracle& o, const GuidanceSpec& g,
                        const NoiseSchedule& sch) { return array(ddim_step(x, s, t, o, g, sch)); });
  m.def("ddim_trajectory", [](const Vector& noise, int steps, double t_start, double t_end, const MixtureOracle& o,
                              const GuidanceSpec& g, const NoiseSchedule& sch) {
    const Trajectory traj = ddim_trajectory(noise, SamplerGrid{steps, t_start, t_end}, o, g, sch);
    std::vector<double> ts;
    std::vector<Vector> xs, gts;
    for (const auto& r : traj.records) {
      ts.push_back(r.t);
      xs.push_back(r.x);
      gts.push_back(r.x_gt);
    }
    py::dict d;
    d["t"] = array(ts);
    d["x"] = matrix(xs, o.dimension());
    d["x_gt"] = matrix(gts, o.dimension());
    d["sample"] = array(traj.sample());
    return d;
  }, py::arg("noise"), py::arg("steps"), py::arg("t_start"), py::arg("t_end"), py::arg("oracle"),
     py::arg("guidance"), py::arg("schedule"));

  m.def("sds_residual_2d", [](const Vector& theta, const Vector& eps, double t, const MixtureOracle& o,
                              const GuidanceSpec& g, const NoiseSchedule& s) {
    return array(sds_residual_2d(theta, eps, t, o, g, s));
  });
  m.def("fsd_euler_step_2d", [](const Vector& clean, const Vector& noise, double s, double t, const MixtureOracle& o,
                                const GuidanceSpec& g, const NoiseSchedule& sch) {
    return array(fsd_euler_step_2d(clean, noise, s, t, o, g, sch));
  });

  py::class_<AdamState>(m, "AdamState")
      .def(py::init<std::size_t>())
      .def_property_readonly("m", [](const AdamState& s) { return array(s.m); })
      .def_property_readonly("v", [](const AdamState& s) { return array(s.v); })
      .def_readonly("step", &AdamState::step)
      .def("step_update", [](AdamState& s, const Vector& grad, double lr) { return array(adam_step(s, grad, lr)); },
           py::arg("grad"), py::arg("lr"));

  m.def("run_distill_2d", [](const Vector& theta0, const std::string& method, const MixtureOracle& o,
                             const NoiseSchedule& s, std::uint64_t seed, std::int64_t iterations,
                             std::optional<double> learning_rate, const std::string& weighting,
                             const std::optional<GuidanceSpec>& guidance) {
    DistillConfig cfg = DistillConfig::defaults(parse_distill_method(method));
    cfg.plan.iterations = iterations;
    if (learning_rate) cfg.learning_rate = *learning_rate;
    cfg.weighting = parse_weighting(weighting);
    if (guidance) cfg.guidance = *guidance;
    const Distill2dResult r = run_distill_2d(theta0, cfg, o, s, seed);
    std::vector<double> ts;
    for (const auto& e : r.log) ts.push_back(e.t);
    std::vector<Vector> thetas;
    for (const auto& st : r.states) thetas.push_back(st.theta);
    py::dict d;
    d["theta"] = array(r.theta);
    d["t"] = array(ts);
    d["thetas"] = matrix(thetas, o.dimension());
    d["clamped_elements"] = r.clamped_elements;
    return d;
  }, py::arg("theta0"), py::arg("method"), py::arg("oracle"), py::arg("schedule"), py::arg("seed"),
     py::arg("iterations") = 500, py::arg("learning_rate") = std::nullopt, py::arg("weighting") = "constant-one",
     py::arg("guidance") = std::nullopt);

  py::class_<Camera>(m, "Camera")
      .def(py::init(&make_camera), py::arg("theta") = 1.5707963267948966, py::arg("phi") = 0.0,
           py::arg("fov") = 0.6981317007977318, py::arg("radius") = 2.5)
      .def_readonly("theta", &Camera::theta)
      .def_readonly("phi", &Camera::phi)
      .def_readonly("fov", &Camera::fov)
      .def_readonly("radius", &Camera::radius);

  py::class_<VoxelScene>(m, "VoxelScene")
      .def(py::init<int, Rgb, double, double>(), py::arg("resolution") = 16,
           py::arg("background") = Rgb{1.0, 1.0, 1.0}, py::arg("density_pre") = -1.0, py::arg("color_pre") = 0.0)
      .def_property_readonly("resolution", &VoxelScene::resolution)
      .def_property("params", [](const VoxelScene& s) { return array(Vector(s.params().begin(), s.params().end())); },
                    [](VoxelScene& s, const Vector& p) {
                      if (p.size() != s.params().size()) throw ConfigError("params has the wrong size");
                      std::copy(p.begin(), p.end(), s.params().begin());
                    });
  m.def("render", [](const VoxelScene& s, const Camera& c, int height, int width, int samples, double alpha0) {
    return render_dict(render(s, c, RenderSettings{height, width, samples, alpha0}));
  }, py::arg("scene"), py::arg("camera"), py::arg("height") = 8, py::arg("width") = 8,
     py::arg("samples_per_ray") = 32, py::arg("alpha_threshold") = 0.5);
  m.def("render_vjp", [](const VoxelScene& s, const Camera& c, const Vector& residual, int height, int width,
                         int samples) {
    return array(render_vjp(s, c, RenderSettings{height, width, samples, 0.5}, residual));
  }, py::arg("scene"), py::arg("camera"), py::arg("residual"), py::arg("height") = 8, py::arg("width") = 8,
     py::arg("samples_per_ray") = 32);

  m.def("world_map_query", [](const Camera& c, std::uint64_t seed, double theta_extent, double beta,
                              const std::vector<std::uint8_t>& mask, int height, int width) {
    const WorldMapNoise field(PatchShape{3, height, width}, theta_extent, beta, seed);
    RandomStream rng(seed, Stream::kFreshNoise);
    return array(field.query(c, mask, rng));
  }, py::arg("camera"), py::arg("seed"), py::arg("theta_extent"), py::arg("beta"), py::arg("mask"),
     py::arg("height") = 8, py::arg("width") = 8);
  m.def("r_plus", [](const Camera& c, double theta_extent) {
    const AlignmentRadius r = r_plus(c, theta_extent);
    return std::make_pair(r.r_theta, r.r_phi);
  });
  m.def("simulate_alignment_radius", [](const Camera& c, double theta_extent, const std::string& axis) {
    return simulate_alignment_radius(c, PatchShape{}, theta_extent,
                                     axis == "polar" ? AlignmentAxis::kPolar : AlignmentAxis::kAzimuth);
  }, py::arg("camera"), py::arg("theta_extent"), py::arg("axis") = "azimuth");

  m.def("ensemble_diversity", [](const std::vector<Vector>& endpoints, const MixtureOracle& o) {
    const EnsembleReport r = ensemble_diversity(endpoints, o);
    py::dict d;
    d["dispersion"] = r.dispersion;
    d["mode_histogram"] = r.mode_histogram;
    d["mode_assignment"] = r.mode_assignment;
    d["pairwise"] = matrix(r.pairwise, endpoints.size());
    return d;
  });

  m.def("run_experiment_json", [](const std::string& config_json, const std::string& base_dir, bool verbose) {
    RunConfig cfg;
    try {
      cfg = run_config_from_json(nlohmann::json::parse(config_json), base_dir);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(e.what());
    }
    RunOptions opts;
    opts.verbose = verbose;
    const ExperimentResult r = run_experiment(cfg, opts);
    return std::make_pair(r.exit_code, r.report.dump());
  }, py::arg("config_json"), py::arg("base_dir") = "", py::arg("verbose") = false);
}
