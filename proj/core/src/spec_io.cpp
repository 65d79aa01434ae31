// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/spec_io.hpp"

#include <stdexcept>

namespace rdf {
namespace {

Eigen::Vector3d vec3_key(const Config& cfg, const std::string& key,
                         const Eigen::Vector3d& fallback) {
  const std::vector<double> fb{fallback.x(), fallback.y(), fallback.z()};
  const std::vector<double> v = cfg.get_double_list(key, fb);
  if (v.size() != 3) {
    throw std::runtime_error("config key '" + key + "': expected 3 numbers");
  }
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

}  // namespace

RadarConfig radar_from_config(const Config& cfg, const RadarConfig& base) {
  RadarConfig r = base;
  r.n_range = cfg.get_int("radar.n_range", r.n_range);
  r.n_doppler = cfg.get_int("radar.n_doppler", r.n_doppler);
  r.n_antenna = cfg.get_int("radar.n_antenna", r.n_antenna);
  r.range_resolution = cfg.get_double("radar.range_resolution",
                                      r.range_resolution);
  r.doppler_resolution = cfg.get_double("radar.doppler_resolution",
                                        r.doppler_resolution);
  r.samples_per_ray = cfg.get_int("radar.samples_per_ray", r.samples_per_ray);
  r.circle_samples = cfg.get_int("radar.circle_samples", r.circle_samples);
  r.validate();
  return r;
}

CameraIntrinsics camera_from_config(const Config& cfg,
                                    const CameraIntrinsics& base) {
  CameraIntrinsics c = base;
  c.width = cfg.get_int("camera.width", c.width);
  c.height = cfg.get_int("camera.height", c.height);
  // A bare size change re-focuses and re-centers unless told otherwise.
  const bool resized =
      cfg.has("camera.width") || cfg.has("camera.height");
  c.fx = cfg.get_double("camera.fx", resized ? static_cast<double>(c.width)
                                             : c.fx);
  c.fy = cfg.get_double("camera.fy", resized ? static_cast<double>(c.width)
                                             : c.fy);
  c.cx = cfg.get_double("camera.cx", resized ? 0.5 * c.width : c.cx);
  c.cy = cfg.get_double("camera.cy", resized ? 0.5 * c.height : c.cy);
  if (c.width <= 0 || c.height <= 0 || c.fx <= 0.0 || c.fy <= 0.0) {
    throw std::runtime_error("camera.*: non-positive size or focal length");
  }
  return c;
}

DatasetConfig dataset_config_from(const Config& cfg) {
  DatasetConfig d;
  d.scene = make_scene(cfg.get_string("scene.preset", "blocks"),
                       cfg.get_u64("scene.seed", 0),
                       cfg.get_double("scene.azimuth_separation_deg", 5.0));
  const std::string kind = cfg.get_string("trajectory.kind", "orbit");
  if (kind == "orbit") {
    d.trajectory.kind = TrajectorySpec::Kind::kOrbit;
  } else if (kind == "lawnmower") {
    d.trajectory.kind = TrajectorySpec::Kind::kLawnmower;
  } else if (kind == "random-walk") {
    d.trajectory.kind = TrajectorySpec::Kind::kRandomWalk;
  } else {
    throw std::runtime_error("trajectory.kind: unknown kind '" + kind + "'");
  }
  d.trajectory.n_frames = cfg.get_int("trajectory.n_frames",
                                      d.trajectory.n_frames);
  d.trajectory.dt = cfg.get_double("trajectory.dt", d.trajectory.dt);
  d.trajectory.radius = cfg.get_double("trajectory.radius", d.trajectory.radius);
  d.trajectory.height = cfg.get_double("trajectory.height", d.trajectory.height);
  d.trajectory.speed = cfg.get_double("trajectory.speed", d.trajectory.speed);
  d.trajectory.seed = cfg.get_u64("trajectory.seed", d.trajectory.seed);
  if (d.trajectory.n_frames <= 1 || d.trajectory.dt <= 0.0 ||
      d.trajectory.speed <= 0.0) {
    throw std::runtime_error("trajectory.*: need n_frames > 1, dt > 0, speed > 0");
  }
  d.radar = radar_from_config(cfg);
  d.camera = camera_from_config(cfg);
  d.gt_samples_per_ray = cfg.get_int("sim.gt_samples_per_ray",
                                     d.gt_samples_per_ray);
  d.camera_every = cfg.get_int("sim.camera_every", d.camera_every);
  d.hidden_scale = cfg.get_double("sim.hidden_scale", d.hidden_scale);
  d.noise_scale = cfg.get_double("sim.noise_scale", d.noise_scale);
  d.noise_dof = cfg.get_double("sim.noise_dof", d.noise_dof);
  d.seed = cfg.get_u64("sim.seed", d.seed);
  if (d.gt_samples_per_ray <= 0 || d.hidden_scale <= 0.0 ||
      d.noise_scale < 0.0 || (d.noise_scale > 0.0 && d.noise_dof <= 0.0)) {
    throw std::runtime_error("sim.*: invalid sampling/scale/noise settings");
  }
  return d;
}

SplitRule split_from_config(const Config& cfg, const SplitRule& base) {
  SplitRule s = base;
  const std::string kind = cfg.get_string(
      "split.kind",
      base.kind == SplitRule::Kind::kSpatialBox ? "spatial_box" : "temporal_tail");
  if (kind == "temporal_tail") {
    s.kind = SplitRule::Kind::kTemporalTail;
    s.test_fraction = cfg.get_double("split.test_fraction", s.test_fraction);
    if (!(s.test_fraction >= 0.0 && s.test_fraction < 1.0)) {
      throw std::runtime_error("split.test_fraction outside [0, 1)");
    }
  } else if (kind == "spatial_box") {
    s.kind = SplitRule::Kind::kSpatialBox;
    s.test_region = Eigen::AlignedBox3d(
        vec3_key(cfg, "split.test_region_min", s.test_region.min()),
        vec3_key(cfg, "split.test_region_max", s.test_region.max()));
    if (s.test_region.isEmpty()) {
      throw std::runtime_error("split.test_region is empty");
    }
  } else {
    throw std::runtime_error("split.kind: unknown kind '" + kind + "'");
  }
  return s;
}

FieldConfig field_config_from(const Config& cfg,
                              const Eigen::AlignedBox3d& default_bounds) {
  FieldConfig f;
  f.bounds = default_bounds;
  if (cfg.has("field.bounds_min") || cfg.has("field.bounds_max")) {
    f.bounds = Eigen::AlignedBox3d(
        vec3_key(cfg, "field.bounds_min", default_bounds.min()),
        vec3_key(cfg, "field.bounds_max", default_bounds.max()));
  }
  if (f.bounds.isEmpty()) {
    throw std::runtime_error(
        "field bounds unknown: set field.bounds_min/max or use a dataset whose "
        "manifest records a working volume");
  }
  f.resolutions = cfg.get_int_list("field.resolutions", f.resolutions);
  f.feature_dim = cfg.get_int("field.feature_dim", f.feature_dim);
  f.code_dim = cfg.get_int("field.code_dim", f.code_dim);
  f.sh_degree = cfg.get_int("field.sh_degree", f.sh_degree);
  f.use_sh = cfg.get_bool("field.use_sh", f.use_sh);
  f.brdf_count = cfg.get_int("field.brdf_count", f.brdf_count);
  f.brdf_rho_min = cfg.get_double("field.brdf_rho_min", f.brdf_rho_min);
  f.brdf_rho_max = cfg.get_double("field.brdf_rho_max", f.brdf_rho_max);
  f.gain_azimuth = cfg.get_int("field.gain_azimuth", f.gain_azimuth);
  f.gain_elevation = cfg.get_int("field.gain_elevation", f.gain_elevation);
  f.radar_hidden_width = cfg.get_int("field.radar_hidden_width",
                                     f.radar_hidden_width);
  const std::string act = cfg.get_string("field.reflectance_activation",
                                         "softplus");
  if (act == "softplus") {
    f.reflectance_activation = RadarAppearance::Activation::kSoftplus;
  } else if (act == "exp") {
    f.reflectance_activation = RadarAppearance::Activation::kExp;
  } else {
    throw std::runtime_error("field.reflectance_activation: unknown '" + act +
                             "'");
  }
  f.density_bias_init = cfg.get_double("field.density_bias_init",
                                       f.density_bias_init);
  f.normal_resolutions = cfg.get_int_list("field.normal_resolutions",
                                          f.normal_resolutions);
  // n_antenna comes from the radar config at construction time; field.* may
  // still override for standalone uses.
  f.n_antenna = cfg.get_int("field.n_antenna", f.n_antenna);
  return f;
}

TrainConfig train_config_from(const Config& cfg, const RadarConfig& radar,
                              const CameraIntrinsics& camera) {
  TrainConfig t;
  t.radar = radar;
  t.camera = camera;
  t.camera_samples_per_ray = cfg.get_int("train.camera_samples_per_ray",
                                         t.camera_samples_per_ray);
  t.proposal_coarse = cfg.get_int("train.proposal_coarse", t.proposal_coarse);
  t.proposal_fine = cfg.get_int("train.proposal_fine", t.proposal_fine);
  t.rays_per_batch = cfg.get_int("train.rays_per_batch", t.rays_per_batch);
  t.columns_per_batch = cfg.get_int("train.columns_per_batch",
                                    t.columns_per_batch);
  t.proposal_rays = cfg.get_int("train.proposal_rays", t.proposal_rays);
  t.bce_samples = cfg.get_int("train.bce_samples", t.bce_samples);
  t.normal_samples = cfg.get_int("train.normal_samples", t.normal_samples);
  t.ssim_every = cfg.get_int("train.ssim_every", t.ssim_every);
  t.stage1.iterations = cfg.get_int("train.stage1.iterations",
                                    t.stage1.iterations);
  t.stage1.lr_begin = cfg.get_double("train.stage1.lr_begin", t.stage1.lr_begin);
  t.stage1.lr_end = cfg.get_double("train.stage1.lr_end", t.stage1.lr_end);
  t.stage2.iterations = cfg.get_int("train.stage2.iterations",
                                    t.stage2.iterations);
  t.stage2.lr_begin = cfg.get_double("train.stage2.lr_begin", t.stage2.lr_begin);
  t.stage2.lr_end = cfg.get_double("train.stage2.lr_end", t.stage2.lr_end);
  t.lr_pose_begin = cfg.get_double("train.lr_pose_begin", t.lr_pose_begin);
  t.lr_pose_end = cfg.get_double("train.lr_pose_end", t.lr_pose_end);
  t.train_pose = cfg.get_bool("train.pose", t.train_pose);
  t.use_camera_geometry_for_radar = cfg.get_bool(
      "train.use_camera_geometry_for_radar", t.use_camera_geometry_for_radar);
  t.train_antennas = cfg.get_int_list("train.antennas", t.train_antennas);
  t.train_fraction = cfg.get_double("train.fraction", t.train_fraction);
  t.log_every = cfg.get_int("train.log_every", t.log_every);

  t.weights.radar_l1 = cfg.get_double("weights.radar_l1", t.weights.radar_l1);
  t.weights.radar_ssim = cfg.get_double("weights.radar_ssim",
                                        t.weights.radar_ssim);
  t.weights.camera_l1 = cfg.get_double("weights.camera_l1",
                                       t.weights.camera_l1);
  t.weights.interlevel = cfg.get_double("weights.interlevel",
                                        t.weights.interlevel);
  t.weights.bce = cfg.get_double("weights.bce", t.weights.bce);
  t.weights.normals_gradient = cfg.get_double("weights.normals_gradient",
                                              t.weights.normals_gradient);
  t.weights.normals_orientation = cfg.get_double(
      "weights.normals_orientation", t.weights.normals_orientation);
  t.weights.pose_reg.w_offsets = cfg.get_double("pose_reg.w_offsets",
                                                t.weights.pose_reg.w_offsets);
  t.weights.pose_reg.w_velocity = cfg.get_double("pose_reg.w_velocity",
                                                 t.weights.pose_reg.w_velocity);
  t.weights.pose_reg.w_acceleration = cfg.get_double(
      "pose_reg.w_acceleration", t.weights.pose_reg.w_acceleration);
  t.weights.pose_reg.w_kinematic = cfg.get_double(
      "pose_reg.w_kinematic", t.weights.pose_reg.w_kinematic);
  t.weights.pose_reg.window = cfg.get_int("pose_reg.window",
                                          t.weights.pose_reg.window);
  return t;
}

ScaleSearchConfig scale_search_from(const Config& cfg,
                                    const RadarConfig& radar) {
  ScaleSearchConfig s;
  s.radar = radar;
  s.s_min = cfg.get_double("scale.s_min", s.s_min);
  s.s_max = cfg.get_double("scale.s_max", s.s_max);
  s.grid_points = cfg.get_int("scale.grid_points", s.grid_points);
  s.rel_tol = cfg.get_double("scale.rel_tol", s.rel_tol);
  s.max_frames = cfg.get_int("scale.max_frames", s.max_frames);
  return s;
}

}  // namespace rdf
