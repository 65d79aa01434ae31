// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Render-only subcommands. These reconstruct the scene field (and, when a
// dataset is given, the fitted trajectory) straight from a checkpoint and
// never touch the trainer, so checkpoint blocks that only exist during
// fitting (the proposal grids) are skipped via subset matching.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include <rdfield/checkpoint_io.hpp>
#include <rdfield/dataset_io.hpp>
#include <rdfield/image_io.hpp>
#include <rdfield/train.hpp>

#include "tool_common.hpp"

namespace rdftool {
namespace {

/// Field (and optional trajectory) restored from a checkpoint.
struct RestoredScene {
  std::unique_ptr<rdf::SceneField> field;
  rdf::Trajectory* trajectory = nullptr;  // registered when non-null
  rdf::ParamRegistry registry;
};

RestoredScene restore_scene(const std::string& checkpoint,
                            rdf::Trajectory* trajectory) {
  RestoredScene scene;
  const rdf::CheckpointInfo info = rdf::read_checkpoint_info(checkpoint);
  scene.field = std::make_unique<rdf::SceneField>(info.field);
  scene.field->register_params(&scene.registry);
  scene.trajectory = trajectory;
  if (trajectory != nullptr) {
    trajectory->register_params(&scene.registry, /*include_scale=*/true);
  }
  rdf::load_checkpoint_params(checkpoint, scene.registry,
                              rdf::BlockMatch::kSubset);
  return scene;
}

rdf::RadarConfig radar_with_overrides(const rdf::Config& cfg,
                                      rdf::RadarConfig radar) {
  if (cfg.has("radar.samples_per_ray")) {
    radar.samples_per_ray = cfg.get_int("radar.samples_per_ray", 0);
  }
  if (cfg.has("radar.circle_samples")) {
    radar.circle_samples = cfg.get_int("radar.circle_samples", 0);
  }
  radar.validate();
  return radar;
}

}  // namespace

int run_superresolve(const ToolContext& ctx, const std::string& dataset,
                     const std::string& checkpoint, const std::string& out_dir,
                     const std::vector<int>& frames, int n_azimuth,
                     double span_deg, int rays_per_bin) {
  if (n_azimuth < 1 || rays_per_bin < 1) {
    throw std::runtime_error("--azimuth-bins and --rays-per-bin must be >= 1");
  }
  if (!(span_deg > 0.0 && span_deg <= 360.0)) {
    throw std::runtime_error("--span-deg must lie in (0, 360]");
  }
  rdf::LoadedDataset loaded = rdf::read_dataset(dataset);
  rdf::Trajectory trajectory = loaded.data.trajectory;
  const RestoredScene scene = restore_scene(checkpoint, &trajectory);
  const rdf::RadarConfig radar =
      radar_with_overrides(ctx.config, loaded.manifest.radar);

  const rdf::RadarSceneRefs refs{&scene.field->geometry_radar,
                                 &scene.field->radar_appearance,
                                 &scene.field->normals, &scene.field->gains};
  const rdf::LinearSampler sampler(/*jitter=*/true);
  const double span = span_deg * M_PI / 180.0;

  std::filesystem::create_directories(out_dir);
  std::ostringstream listing;
  listing << "[";
  bool first = true;
  for (int id : frames) {
    if (id < 0 || static_cast<std::size_t>(id) >= trajectory.size()) {
      throw std::runtime_error("frame index " + std::to_string(id) +
                               " is outside the dataset");
    }
    const rdf::SensorState state =
        rdf::sensor_state(trajectory, static_cast<std::size_t>(id));
    const Eigen::MatrixXd map = rdf::render_range_azimuth(
        refs, state, n_azimuth, span, rays_per_bin, radar, sampler,
        rdf::Rng::mix(ctx.seed, 0x5A2C0000ULL + static_cast<uint64_t>(id)),
        ctx.workers);
    char name[64];
    std::snprintf(name, sizeof(name), "range_azimuth_%05d.png", id);
    const auto path = std::filesystem::path(out_dir) / name;
    rdf::save_heatmap_png(path, map);  // auto-scaled to the rendered range
    if (!first) listing << ",";
    first = false;
    listing << "{\"frame\":" << id << ",\"file\":\"" << name
            << "\",\"peak\":" << map.maxCoeff() << "}";
  }
  listing << "]";

  std::cout << "{\"out_dir\":\"" << out_dir << "\",\"n_azimuth\":" << n_azimuth
            << ",\"span_deg\":" << span_deg << ",\"maps\":" << listing.str()
            << "}\n";
  return kOk;
}

int run_occupancy_slice(const ToolContext& ctx, const std::string& checkpoint,
                        const std::string& out_dir, double height,
                        const std::string& which_field, int resolution,
                        const std::string& dataset, int depth_frame) {
  if (resolution < 2) throw std::runtime_error("--resolution must be >= 2");
  if (which_field != "radar" && which_field != "camera") {
    throw std::runtime_error("--field must be radar or camera, got '" +
                             which_field + "'");
  }

  // The trajectory is only needed (and only loadable) with a dataset.
  rdf::LoadedDataset loaded;
  rdf::Trajectory trajectory;
  const bool want_depth = !dataset.empty() && depth_frame >= 0;
  if (want_depth) {
    loaded = rdf::read_dataset(dataset);
    trajectory = loaded.data.trajectory;
  }
  const RestoredScene scene =
      restore_scene(checkpoint, want_depth ? &trajectory : nullptr);

  const Eigen::AlignedBox3d& bounds = scene.field->config.bounds;
  if (height < bounds.min().z() || height > bounds.max().z()) {
    throw std::runtime_error(
        "slice height " + std::to_string(height) +
        " lies outside the reconstructed volume's z extent");
  }
  const rdf::GeometryField& geometry = which_field == "radar"
                                           ? scene.field->geometry_radar
                                           : scene.field->geometry_camera;

  // Row 0 is the +y edge so the PNG reads like a map (north up).
  Eigen::MatrixXd occupancy(resolution, resolution);
  double mean = 0.0;
  int above_half = 0;
  for (int r = 0; r < resolution; ++r) {
    const double fy = (r + 0.5) / resolution;
    const double y = bounds.max().y() - fy * (bounds.max().y() - bounds.min().y());
    for (int c = 0; c < resolution; ++c) {
      const double fx = (c + 0.5) / resolution;
      const double x =
          bounds.min().x() + fx * (bounds.max().x() - bounds.min().x());
      const double a = geometry.query_alpha(Eigen::Vector3d(x, y, height));
      occupancy(r, c) = a;
      mean += a;
      above_half += a >= 0.5 ? 1 : 0;
    }
  }
  mean /= static_cast<double>(resolution) * resolution;

  std::filesystem::create_directories(out_dir);
  char name[96];
  std::snprintf(name, sizeof(name), "occupancy_%s_z%+.3f.png",
                which_field.c_str(), height);
  rdf::save_heatmap_png(std::filesystem::path(out_dir) / name, occupancy, 0.0,
                        1.0);

  std::ostringstream depth_json;
  depth_json << "null";
  if (want_depth) {
    if (static_cast<std::size_t>(depth_frame) >= trajectory.size()) {
      throw std::runtime_error("--depth-frame is outside the dataset");
    }
    const rdf::SensorState state =
        rdf::sensor_state(trajectory, static_cast<std::size_t>(depth_frame));
    const int spp = ctx.config.get_int("render.samples_per_ray", 96);
    const rdf::LinearSampler sampler(/*jitter=*/true);
    const rdf::CameraSceneRefs cam{&scene.field->geometry_camera,
                                   &scene.field->camera_appearance};
    const rdf::CameraSceneRefs rad{&scene.field->geometry_radar, nullptr};
    const uint64_t seed =
        rdf::Rng::mix(ctx.seed, 0xDE9700ULL + static_cast<uint64_t>(depth_frame));
    const rdf::RenderedImage camera_im = rdf::render_camera_image(
        cam, state, loaded.manifest.camera, spp, sampler, seed, ctx.workers);
    const rdf::RenderedImage radar_im = rdf::render_camera_image(
        rad, state, loaded.manifest.camera, spp, sampler, seed, ctx.workers);
    char cam_name[64], rad_name[64];
    std::snprintf(cam_name, sizeof(cam_name), "depth_camera_%05d.pgm",
                  depth_frame);
    std::snprintf(rad_name, sizeof(rad_name), "depth_radar_%05d.pgm",
                  depth_frame);
    rdf::save_depth_pgm(std::filesystem::path(out_dir) / cam_name, camera_im);
    rdf::save_depth_pgm(std::filesystem::path(out_dir) / rad_name, radar_im);
    depth_json.str("");
    depth_json << "{\"camera\":\"" << cam_name << "\",\"radar\":\"" << rad_name
               << "\"}";
  }

  std::cout << "{\"out_dir\":\"" << out_dir << "\",\"slice\":\"" << name
            << "\",\"field\":\"" << which_field << "\",\"height\":" << height
            << ",\"mean_alpha\":" << mean << ",\"fraction_above_half\":"
            << static_cast<double>(above_half) /
                   (static_cast<double>(resolution) * resolution)
            << ",\"depth\":" << depth_json.str() << "}\n";
  return kOk;
}

}  // namespace rdftool
