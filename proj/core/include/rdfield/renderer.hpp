// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rdfield/field.hpp"
#include "rdfield/geometry.hpp"
#include "rdfield/params.hpp"
#include "rdfield/rng.hpp"

namespace rdf {

/// Radar "intrinsics": cube dimensions, bin widths, and sampling counts.
struct RadarConfig {
  int n_range = 128;
  int n_doppler = 128;
  int n_antenna = 8;
  double range_resolution = 0.0625;    // meters per range bin
  double doppler_resolution = 0.05;    // (m/s) per Doppler bin
  int samples_per_ray = 32;
  int circle_samples = 64;

  double range_center(int i) const { return (i + 0.5) * range_resolution; }
  double max_range() const { return n_range * range_resolution; }
  /// Doppler axis centered at zero: bin n_doppler/2 maps to 0 m/s.
  double doppler_value(int j) const {
    return (j - n_doppler / 2) * doppler_resolution;
  }

  void validate() const;
};

/// One radar measurement: amplitude cube (range x Doppler x antenna) plus a
/// validity mask (false = noise-dominated, excluded from losses/metrics).
struct RangeDopplerFrame {
  double timestamp = 0.0;
  int n_range = 0;
  int n_doppler = 0;
  int n_antenna = 0;
  std::vector<double> cube;   // range-major: ((i * n_doppler) + j) * n_antenna + k
  std::vector<uint8_t> mask;  // 1 = valid

  RangeDopplerFrame() = default;
  RangeDopplerFrame(int nr, int nd, int na, double t = 0.0);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_doppler + j) * n_antenna + k;
  }
  double& at(int i, int j, int k) { return cube[index(i, j, k)]; }
  double at(int i, int j, int k) const { return cube[index(i, j, k)]; }
  bool valid(int i, int j, int k) const { return mask[index(i, j, k)] != 0; }
  std::size_t size() const { return cube.size(); }
};

/// Sample-distance generator for one ray. Implementations must be
/// deterministic functions of their inputs and the supplied RNG.
class RaySampler {
 public:
  virtual ~RaySampler() = default;
  /// Appends `n` strictly increasing distances within [t_near, t_far].
  virtual void sample(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                      double t_near, double t_far, int n, Rng* rng,
                      std::vector<double>* ts) const = 0;
};

/// Range-linear placement: one sample per equal slice of [t_near, t_far],
/// optionally jittered within its slice. With jitter off the positions are
/// parameter-independent, which the finite-difference gradient checks rely
/// on.
class LinearSampler : public RaySampler {
 public:
  explicit LinearSampler(bool jitter = false) : jitter_(jitter) {}
  void sample(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
              double t_near, double t_far, int n, Rng* rng,
              std::vector<double>* ts) const override;

 private:
  bool jitter_;
};

/// Sensor state consumed by the renderer: effective position/velocity plus
/// the rotation split into base x offset so the backward pass can chain
/// through the axis-angle offset.
struct SensorState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond base_rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d delta_theta = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();

  Eigen::Quaterniond rotation() const {
    return so3_exp(delta_theta) * base_rotation;
  }
  static SensorState from_frame(const FrameState& f) {
    SensorState s;
    s.position = f.pose.position;
    s.base_rotation = f.pose.rotation;
    s.velocity = f.velocity;
    return s;
  }
};

/// Non-owning view of the model pieces radar rendering reads. `appearance`
/// may be null for unit reflectance (scale calibration renders) and `gains`
/// may be null for unit gain.
struct RadarSceneRefs {
  const GeometryField* geometry = nullptr;
  const RadarAppearance* appearance = nullptr;
  const NormalField* normals = nullptr;
  const AntennaGainModel* gains = nullptr;
};

/// Gradients flowing to one frame's sensor state.
struct PoseGrad {
  Eigen::Vector3d dposition = Eigen::Vector3d::Zero();
  Eigen::Vector3d dtheta = Eigen::Vector3d::Zero();
  Eigen::Vector3d dvelocity = Eigen::Vector3d::Zero();
};

/// Velocities below this magnitude make Doppler ill-defined; frames are
/// skipped for radar rendering and losses.
inline constexpr double kMinSpeed = 1e-4;

/// Per-range-bin return amplitudes of a single ray (the factored radar
/// amplitude model: gain / r^2 * reflectance * alpha * squared-transmittance,
/// with samples averaged per bin). `gain` is the antenna gain along this ray;
/// `ts` must be sorted ascending. Samples at or beyond max range are ignored.
/// If `appearance` is null, reflectance is 1 everywhere.
Eigen::VectorXd render_amplitude_along_ray(const RadarSceneRefs& refs,
                                           const Eigen::Vector3d& origin,
                                           const Eigen::Vector3d& omega,
                                           const std::vector<double>& ts,
                                           double gain, const RadarConfig& config);

/// One Doppler column (all range bins) for Doppler bin j and antenna k.
/// Returns zeros when the Doppler circle is empty. `seed` fixes the
/// per-ray sample RNG streams.
Eigen::VectorXd render_doppler_column(const RadarSceneRefs& refs,
                                      const SensorState& state, int j, int k,
                                      const RadarConfig& config,
                                      const RaySampler& sampler, uint64_t seed);

/// Reverse-mode pass for one Doppler column: recomputes the forward pass with
/// the same seed and accumulates the parameter gradients of
/// sum_i dL_dY[i] * Y[i] into the tape. Pose/velocity chain terms accumulate
/// into `pose_grad` when non-null (freezing parameters is the optimizer's
/// concern, not the renderer's).
void render_doppler_column_backward(const RadarSceneRefs& refs,
                                    const SensorState& state, int j, int k,
                                    const RadarConfig& config,
                                    const RaySampler& sampler, uint64_t seed,
                                    const Eigen::Ref<const Eigen::VectorXd>& dL_dY,
                                    GradientTape* tape, PoseGrad* pose_grad);

/// Full cube for one frame; parallel over (Doppler, antenna) columns with a
/// fixed reduction order, so results are bit-identical for any worker count.
/// Returns nullopt when the frame velocity is degenerate.
std::optional<RangeDopplerFrame> render_frame(const RadarSceneRefs& refs,
                                              const SensorState& state,
                                              double timestamp,
                                              const RadarConfig& config,
                                              const RaySampler& sampler,
                                              uint64_t seed, int n_workers);

/// Range-azimuth map rendered with `n_azimuth` virtual boresight directions
/// spanning `azimuth_span` radians centered on the sensor's +x axis, at zero
/// elevation and unit gain. Each azimuth bin averages `rays_per_bin` sub-rays
/// across its width (a thin-beam render cannot reproduce beam-width merging).
/// Result is n_range x n_azimuth.
Eigen::MatrixXd render_range_azimuth(const RadarSceneRefs& refs,
                                     const SensorState& state, int n_azimuth,
                                     double azimuth_span, int rays_per_bin,
                                     const RadarConfig& config,
                                     const RaySampler& sampler, uint64_t seed,
                                     int n_workers);

/// Pinhole camera; sensor frame is x forward, y left, z up. Pixel (u, v)
/// with u rightward and v downward maps to the unnormalized direction
/// (1, -(u - cx) / fx, -(v - cy) / fy).
struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double fx = 64.0;
  double fy = 64.0;
  double cx = 32.0;
  double cy = 32.0;

  Eigen::Vector3d pixel_direction(double u, double v) const {
    return Eigen::Vector3d(1.0, -(u - cx) / fx, -(v - cy) / fy).normalized();
  }
};

struct CameraSceneRefs {
  const GeometryField* geometry = nullptr;
  const CameraAppearance* appearance = nullptr;  // null = white
};

/// Simple RGB + depth raster. Depth is -1 where no geometry was hit.
struct RenderedImage {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;    // 3 per pixel, row-major
  std::vector<double> depth;  // 1 per pixel

  RenderedImage() = default;
  RenderedImage(int w, int h)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0),
        depth(static_cast<std::size_t>(w) * h, -1.0) {}
};

/// Alpha-composited color and weighted-mean depth along one ray.
void render_camera_ray(const CameraSceneRefs& refs, const Eigen::Vector3d& origin,
                       const Eigen::Vector3d& dir, const std::vector<double>& ts,
                       Eigen::Vector3d* rgb, double* depth,
                       double* weight_sum = nullptr);

/// Backward mate of render_camera_ray for a color loss.
void render_camera_ray_backward(const CameraSceneRefs& refs,
                                const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir,
                                const std::vector<double>& ts,
                                const Eigen::Vector3d& dL_drgb,
                                GradientTape* tape);

/// Full image render, parallel over pixel rows. `max_depth` bounds the
/// sample interval when the ray exits the field bounds.
RenderedImage render_camera_image(const CameraSceneRefs& refs,
                                  const SensorState& state,
                                  const CameraIntrinsics& intrinsics,
                                  int samples_per_ray, const RaySampler& sampler,
                                  uint64_t seed, int n_workers);

/// Marks the tape consumed with the final scalar loss (see GradientTape).
void backward(GradientTape* tape, double loss);

/// Entry/exit of a ray against an axis-aligned box, clipped to
/// [t_min_floor, +inf). Returns false for a miss.
bool intersect_bounds(const Eigen::AlignedBox3d& box, const Eigen::Vector3d& origin,
                      const Eigen::Vector3d& dir, double t_min_floor,
                      double* t_enter, double* t_exit);

}  // namespace rdf
