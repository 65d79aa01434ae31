// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rdfield/field.hpp"
#include "rdfield/geometry.hpp"
#include "rdfield/renderer.hpp"
#include "rdfield/rng.hpp"

namespace rdf {

/// Per-primitive material. Camera and radar opacities are separate so scenes
/// can contain camera-opaque but radar-transparent structure (and vice
/// versa).
struct Material {
  double camera_opacity = 1.0;
  double radar_opacity = 1.0;
  double reflectivity = 0.5;  // radar return scale
  double rho = 0.5;           // retroreflectance roughness
  Eigen::Vector3d albedo = Eigen::Vector3d(0.7, 0.7, 0.7);
};

/// Analytic solid with a signed distance and an outward normal.
struct Primitive {
  enum class Kind { kBox, kSphere, kSlab };

  Kind kind = Kind::kBox;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  // kBox: half extents; kSphere: radius in x(); kSlab: unit normal.
  Eigen::Vector3d param = Eigen::Vector3d::Ones();
  double thickness = 0.1;  // kSlab only: total slab thickness
  Material material;

  double signed_distance(const Eigen::Vector3d& x) const;
  Eigen::Vector3d normal_at(const Eigen::Vector3d& x) const;
};

/// An analytic scene: primitives inside an axis-aligned working volume.
struct SceneSpec {
  Eigen::AlignedBox3d bounds;
  std::vector<Primitive> primitives;

  /// Index of the closest primitive (by signed distance) or -1 when empty.
  int closest(const Eigen::Vector3d& x, double* sd = nullptr) const;

  double alpha_camera(const Eigen::Vector3d& x) const;
  double alpha_radar(const Eigen::Vector3d& x) const;
  /// Outward normal of the closest primitive (UnitZ when empty).
  Eigen::Vector3d normal(const Eigen::Vector3d& x) const;
  /// reflectivity * beta_rho(omega . n) of the closest primitive.
  double radar_reflectance(const Eigen::Vector3d& x,
                           const Eigen::Vector3d& omega) const;
  /// Lambert-shaded albedo (fixed light direction, purely spatial).
  Eigen::Vector3d camera_color(const Eigen::Vector3d& x) const;
};

/// Smooth boresight beam shared by all antennas, times a per-antenna angular
/// ripple with evenly spread phases (so the mean over antennas stays close
/// to the bare beam). Strictly positive.
double gt_antenna_gain(int k, int n_antenna, const Eigen::Vector3d& dir_sensor);

/// Named scene presets used by tests and the synthesis CLI.
///   "blocks"       boxes + spheres of mixed materials (seed-varied)
///   "see-through"  camera-opaque, radar-transparent wall hiding a strong
///                  reflector, plus a visible reference target
///   "plates"       thin retroreflective plates facing different directions
///   "two-targets"  two small equal-range spheres split in azimuth
SceneSpec make_scene(const std::string& name, uint64_t seed = 0,
                     double azimuth_separation_deg = 5.0);

/// Sensor path shapes.
struct TrajectorySpec {
  enum class Kind { kOrbit, kLawnmower, kRandomWalk };
  Kind kind = Kind::kOrbit;
  int n_frames = 128;
  double dt = 0.1;        // seconds between frames
  double radius = 2.0;    // orbit radius / lawnmower leg length
  double height = 0.4;    // sensor height above the scene center plane
  double speed = 0.5;     // target linear speed (m/s)
  uint64_t seed = 0;      // random-walk stream
};

/// Builds a metric trajectory; the boresight (+x) tracks the motion pattern
/// (orbit: scene center; others: velocity direction).
Trajectory make_trajectory(const TrajectorySpec& spec);

/// Ground-truth renders evaluated directly against the analytic scene (no
/// learned structures). These reuse the renderer's compositing core.
RangeDopplerFrame render_frame_analytic(const SceneSpec& scene,
                                        const SensorState& state,
                                        double timestamp,
                                        const RadarConfig& config,
                                        const RaySampler& sampler, uint64_t seed,
                                        int n_workers, bool with_gains = true);

Eigen::MatrixXd render_range_azimuth_analytic(
    const SceneSpec& scene, const SensorState& state, int n_azimuth,
    double azimuth_span, int rays_per_bin, const RadarConfig& config,
    const RaySampler& sampler, uint64_t seed, int n_workers);

RenderedImage render_camera_image_analytic(const SceneSpec& scene,
                                           const SensorState& state,
                                           const CameraIntrinsics& intrinsics,
                                           int samples_per_ray,
                                           const RaySampler& sampler,
                                           uint64_t seed, int n_workers);

/// Writes an analytic scene into a SceneField: geometry grids get a logit
/// ramp (clamped to +-9.2) on the finest level against canonical selector
/// heads; normals get the analytic surface normals; appearance heads become
/// constant-reflectance / flat-color approximations (exact for geometry,
/// approximate for appearance). Fields may already be registered.
void bake_scene(const SceneSpec& scene, SceneField* field);

/// A generated measurement collection.
struct Dataset {
  std::vector<RangeDopplerFrame> frames;  // radar cubes (noise applied)
  std::vector<RenderedImage> images;      // clean camera renders
  std::vector<int> image_frame_index;     // frames the images belong to
  Trajectory trajectory;                  // scaleless (divided by hidden scale)
  Eigen::AlignedBox3d bounds;             // scaleless working volume
  double hidden_scale = 1.0;              // held-out answer
  double noise_scale = 0.0;               // chi-square noise actually applied
  double noise_dof = 0.0;
};

struct DatasetConfig {
  SceneSpec scene;
  TrajectorySpec trajectory;
  RadarConfig radar;
  CameraIntrinsics camera;
  int gt_samples_per_ray = 64;  // sampling density for ground truth renders
  int camera_every = 4;         // camera cadence in frames
  double hidden_scale = 1.0;
  double noise_scale = 0.0;     // 0 disables noise
  double noise_dof = 4.0;
  uint64_t seed = 1;
  int n_workers = 0;            // 0 = default_worker_count()
};

/// Renders radar frames from the metric trajectory, adds chi-square noise,
/// renders camera keyframes, then publishes the trajectory with the hidden
/// scale divided out.
Dataset generate_dataset(const DatasetConfig& config);

}  // namespace rdf
