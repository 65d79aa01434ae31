// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

#include "rdfield/params.hpp"

namespace rdf {

/// Rigid sensor pose. `rotation` maps sensor-frame vectors into the world
/// frame; `position` is the sensor origin in world coordinates.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
};

/// One time sample of the moving sensor: pose plus world-frame velocity.
struct FrameState {
  double time = 0.0;
  Pose pose;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// Time-ordered sensor states plus the calibration learnables attached to
/// them: a global metric scale and per-frame pose/velocity offsets.
/// The stored states are the raw (possibly scaleless) inputs; rendering uses
/// the effective states
///   position = scale * base_position + delta_p
///   rotation = exp(delta_theta) * base_rotation   (left-composed axis-angle)
///   velocity = scale * base_velocity + delta_v.
/// Construction validates strict time ordering.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<FrameState> frames);

  const std::vector<FrameState>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const FrameState& operator[](std::size_t i) const { return frames_[i]; }
  FrameState& operator[](std::size_t i) { return frames_[i]; }

  double start_time() const;
  double end_time() const;

  /// Base pose/velocity at time t (scale and offsets not applied): positions
  /// and velocities interpolate linearly, rotations along the shortest
  /// great-circle arc. Throws std::out_of_range when t lies outside
  /// [start_time, end_time] beyond a small tolerance.
  FrameState interpolate(double t) const;

  double scale() const { return scale_; }
  void set_scale(double s);

  /// Per-frame learnable offsets, 9 doubles each: [delta_p, delta_theta,
  /// delta_v]. Zero until written.
  Eigen::Vector3d delta_p(std::size_t i) const { return offset_segment(i, 0); }
  Eigen::Vector3d delta_theta(std::size_t i) const { return offset_segment(i, 3); }
  Eigen::Vector3d delta_v(std::size_t i) const { return offset_segment(i, 6); }
  void set_offsets(std::size_t i, const Eigen::Vector3d& dp,
                   const Eigen::Vector3d& dtheta, const Eigen::Vector3d& dv);
  const Eigen::VectorXd& offsets() const { return offsets_; }

  /// Scale- and offset-corrected state of frame i.
  FrameState effective(std::size_t i) const;

  /// Registers the offset vector (and optionally the scale scalar) as
  /// learnable blocks.
  void register_params(ParamRegistry* reg, bool include_scale);
  bool registered() const { return offsets_registered_; }

  /// Adds gradients w.r.t. the effective position/velocity and the rotation
  /// offset of frame i into the tape. The scale entry, when registered,
  /// receives the chain terms <dL_dposition, base_p> + <dL_dvelocity, base_v>.
  void accumulate_gradient(std::size_t i, const Eigen::Vector3d& dL_dposition,
                           const Eigen::Vector3d& dL_dtheta,
                           const Eigen::Vector3d& dL_dvelocity,
                           GradientTape* tape) const;

  /// Adds gradients w.r.t. the raw offsets of frame i (no scale chain); used
  /// by regularizers that act on the offsets themselves.
  void accumulate_offset_gradient(std::size_t i, const Eigen::Vector3d& dL_ddp,
                                  const Eigen::Vector3d& dL_ddtheta,
                                  const Eigen::Vector3d& dL_ddv,
                                  GradientTape* tape) const;

 private:
  Eigen::Vector3d offset_segment(std::size_t i, int sub) const;

  std::vector<FrameState> frames_;
  double scale_ = 1.0;
  Eigen::VectorXd offsets_;  // 9 per frame, zero-initialized lazily
  std::size_t offsets_block_ = 0;
  std::size_t scale_block_ = 0;
  bool offsets_registered_ = false;
  bool scale_registered_ = false;
};

/// Returns a trajectory whose base positions and velocities are multiplied by
/// s (rotations, timestamps, offsets unchanged); the stored dynamic scale of
/// the result is reset to 1. Throws for s <= 0.
Trajectory apply_scale(const Trajectory& trajectory, double s);

/// Signed closing rate of `point` as seen from a sensor at `sensor_position`
/// moving with `velocity` (positive when the sensor approaches the point).
double doppler_of_point(const Eigen::Vector3d& sensor_position,
                        const Eigen::Vector3d& velocity,
                        const Eigen::Vector3d& point);

/// Discretized circle of unit ray directions w with <w, velocity> = doppler.
/// `arc_measure` is the arc length each sampled direction represents, i.e.
/// 2*pi*sin(theta)/n, so sums of f(w_m) * arc_measure approximate the circle
/// line integral of f.
struct DopplerCircle {
  std::vector<Eigen::Vector3d> directions;
  double arc_measure = 0.0;
  double cos_theta = 0.0;
  double sin_theta = 0.0;
  double speed = 0.0;
};

/// Derivatives of the circle with respect to the sensor velocity, used when
/// velocity offsets are optimized.
struct DopplerCircleJacobian {
  std::vector<Eigen::Matrix3d> ddir_dvel;  // row i of entry m: d w_m[i] / d v
  Eigen::Vector3d darc_dvel = Eigen::Vector3d::Zero();
};

/// Builds the direction circle for one Doppler bin. Returns nullopt when
/// |doppler| > ||velocity||, where no direction can produce the requested
/// closing rate. At |doppler| == ||velocity|| the circle degenerates to a
/// single direction with zero arc measure. `in_plane_ref` fixes the phase of
/// the angular samples (it is projected into the circle plane); when absent a
/// reference axis is chosen from the velocity's smallest component.
/// If `jac` is non-null it receives velocity derivatives.
std::optional<DopplerCircle> build_doppler_circle(
    const Eigen::Vector3d& velocity, double doppler, int n_dirs,
    const std::optional<Eigen::Vector3d>& in_plane_ref = std::nullopt,
    DopplerCircleJacobian* jac = nullptr);

/// Exponential map from an axis-angle vector to a unit quaternion.
Eigen::Quaterniond so3_exp(const Eigen::Vector3d& axis_angle);

/// Rotates `u` by exp(axis_angle) and, when requested, returns the Jacobian
/// of the rotated vector with respect to the axis-angle parameters.
Eigen::Vector3d rotate_with_jacobian(const Eigen::Vector3d& axis_angle,
                                     const Eigen::Vector3d& u,
                                     Eigen::Matrix3d* dout_daxis = nullptr);

/// Azimuth/elevation of a sensor-frame unit direction: azimuth = atan2(y, x),
/// elevation = asin(z), both in radians.
void direction_to_az_el(const Eigen::Vector3d& dir, double* azimuth,
                        double* elevation);

}  // namespace rdf
