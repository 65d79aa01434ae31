// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdfield/dual.hpp"

namespace rdf {

Trajectory::Trajectory(std::vector<FrameState> frames) : frames_(std::move(frames)) {
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (!(frames_[i - 1].time < frames_[i].time)) {
      throw std::invalid_argument("trajectory times must be strictly increasing");
    }
  }
  offsets_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(9 * frames_.size()));
}

void Trajectory::set_scale(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("trajectory scale must be positive");
  scale_ = s;
}

Eigen::Vector3d Trajectory::offset_segment(std::size_t i, int sub) const {
  return offsets_.segment<3>(static_cast<Eigen::Index>(9 * i + sub));
}

void Trajectory::set_offsets(std::size_t i, const Eigen::Vector3d& dp,
                             const Eigen::Vector3d& dtheta,
                             const Eigen::Vector3d& dv) {
  offsets_.segment<3>(static_cast<Eigen::Index>(9 * i + 0)) = dp;
  offsets_.segment<3>(static_cast<Eigen::Index>(9 * i + 3)) = dtheta;
  offsets_.segment<3>(static_cast<Eigen::Index>(9 * i + 6)) = dv;
}

FrameState Trajectory::effective(std::size_t i) const {
  const FrameState& base = frames_.at(i);
  FrameState out;
  out.time = base.time;
  out.pose.position = scale_ * base.pose.position + delta_p(i);
  out.pose.rotation = (so3_exp(delta_theta(i)) * base.pose.rotation).normalized();
  out.velocity = scale_ * base.velocity + delta_v(i);
  return out;
}

void Trajectory::register_params(ParamRegistry* reg, bool include_scale) {
  if (offsets_registered_) throw std::logic_error("trajectory already registered");
  offsets_block_ = reg->add_block("trajectory/offsets", offsets_.data(),
                                  static_cast<std::size_t>(offsets_.size()));
  offsets_registered_ = true;
  if (include_scale) {
    scale_block_ = reg->add_block("trajectory/scale", &scale_, 1);
    scale_registered_ = true;
  }
}

void Trajectory::accumulate_gradient(std::size_t i,
                                     const Eigen::Vector3d& dL_dposition,
                                     const Eigen::Vector3d& dL_dtheta,
                                     const Eigen::Vector3d& dL_dvelocity,
                                     GradientTape* tape) const {
  if (!offsets_registered_) throw std::logic_error("trajectory not registered");
  double* g = tape->block_grad(offsets_block_) + 9 * i;
  for (int d = 0; d < 3; ++d) {
    g[d] += dL_dposition[d];
    g[3 + d] += dL_dtheta[d];
    g[6 + d] += dL_dvelocity[d];
  }
  if (scale_registered_) {
    const FrameState& base = frames_[i];
    tape->block_grad(scale_block_)[0] += dL_dposition.dot(base.pose.position) +
                                         dL_dvelocity.dot(base.velocity);
  }
}

void Trajectory::accumulate_offset_gradient(std::size_t i,
                                            const Eigen::Vector3d& dL_ddp,
                                            const Eigen::Vector3d& dL_ddtheta,
                                            const Eigen::Vector3d& dL_ddv,
                                            GradientTape* tape) const {
  if (!offsets_registered_) throw std::logic_error("trajectory not registered");
  double* g = tape->block_grad(offsets_block_) + 9 * i;
  for (int d = 0; d < 3; ++d) {
    g[d] += dL_ddp[d];
    g[3 + d] += dL_ddtheta[d];
    g[6 + d] += dL_ddv[d];
  }
}

Trajectory apply_scale(const Trajectory& trajectory, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale must be positive");
  std::vector<FrameState> frames = trajectory.frames();
  for (FrameState& f : frames) {
    f.pose.position *= s;
    f.velocity *= s;
  }
  return Trajectory(std::move(frames));
}

double Trajectory::start_time() const {
  if (frames_.empty()) throw std::out_of_range("trajectory is empty");
  return frames_.front().time;
}

double Trajectory::end_time() const {
  if (frames_.empty()) throw std::out_of_range("trajectory is empty");
  return frames_.back().time;
}

FrameState Trajectory::interpolate(double t) const {
  if (frames_.empty()) throw std::out_of_range("trajectory is empty");
  const double t0 = frames_.front().time;
  const double t1 = frames_.back().time;
  const double tol = 1e-9 * std::max(1.0, t1 - t0);
  if (t < t0 - tol || t > t1 + tol) {
    throw std::out_of_range("interpolation time outside trajectory span");
  }
  const double tc = std::clamp(t, t0, t1);

  auto it = std::upper_bound(frames_.begin(), frames_.end(), tc,
                             [](double v, const FrameState& f) { return v < f.time; });
  if (it == frames_.begin()) return frames_.front();
  if (it == frames_.end()) return frames_.back();
  const FrameState& a = *(it - 1);
  const FrameState& b = *it;
  const double u = (tc - a.time) / (b.time - a.time);

  FrameState out;
  out.time = tc;
  out.pose.position = (1.0 - u) * a.pose.position + u * b.pose.position;
  out.pose.rotation = a.pose.rotation.slerp(u, b.pose.rotation);
  out.velocity = (1.0 - u) * a.velocity + u * b.velocity;
  return out;
}

double doppler_of_point(const Eigen::Vector3d& sensor_position,
                        const Eigen::Vector3d& velocity,
                        const Eigen::Vector3d& point) {
  const Eigen::Vector3d offset = point - sensor_position;
  const double dist = offset.norm();
  if (dist <= 0.0) throw std::invalid_argument("point coincides with the sensor");
  return offset.dot(velocity) / dist;
}

namespace {

// Thin adaptors so the circle template below reads the same for Eigen and
// dual vector types.
double norm_of(const Eigen::Vector3d& v) { return v.norm(); }
Dual3 norm_of(const DualVec3& v) { return norm(v); }
double sqrt_of(double v) { return std::sqrt(v); }
Dual3 sqrt_of(const Dual3& v) { return sqrt(v); }
double dot_of(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a.dot(b); }
Dual3 dot_of(const DualVec3& a, const DualVec3& b) { return dot(a, b); }
Eigen::Vector3d cross_of(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return a.cross(b);
}
DualVec3 cross_of(const DualVec3& a, const DualVec3& b) { return cross(a, b); }
Eigen::Vector3d normalized_of(const Eigen::Vector3d& v) { return v.normalized(); }
DualVec3 normalized_of(const DualVec3& v) { return normalized(v); }

// Shared circle construction, instantiated with plain doubles for the forward
// pass and with Dual3 when velocity derivatives are requested.
template <typename Scalar, typename Vec3>
void circle_directions(const Vec3& velocity, double doppler,
                       const Eigen::Vector3d& ref_axis, int n_dirs,
                       std::vector<Vec3>* directions, Scalar* arc_measure) {
  const Scalar speed = norm_of(velocity);
  const Scalar inv_speed = Scalar(1.0) / speed;
  const Vec3 vhat = inv_speed * velocity;
  const Scalar cos_t = Scalar(doppler) / speed;
  const Scalar sin_t = sqrt_of(Scalar(1.0) - cos_t * cos_t);

  const Vec3 ref(ref_axis);
  const Vec3 e1 = normalized_of(ref - dot_of(ref, vhat) * vhat);
  const Vec3 e2 = cross_of(vhat, e1);

  directions->clear();
  directions->reserve(static_cast<std::size_t>(n_dirs));
  for (int m = 0; m < n_dirs; ++m) {
    const double phi = 2.0 * M_PI * (m + 0.5) / n_dirs;
    const Vec3 rim = Scalar(std::cos(phi)) * e1 + Scalar(std::sin(phi)) * e2;
    directions->push_back(cos_t * vhat + sin_t * rim);
  }
  *arc_measure = Scalar(2.0 * M_PI / n_dirs) * sin_t;
}

Eigen::Vector3d pick_reference_axis(const Eigen::Vector3d& vhat,
                                    const std::optional<Eigen::Vector3d>& user_ref) {
  if (user_ref) {
    const double len = user_ref->norm();
    if (len <= 0.0) throw std::invalid_argument("in-plane reference must be nonzero");
    const Eigen::Vector3d unit = *user_ref / len;
    if (std::abs(unit.dot(vhat)) > 0.999) {
      throw std::invalid_argument("in-plane reference is parallel to the velocity");
    }
    return unit;
  }
  int axis = 0;
  vhat.cwiseAbs().minCoeff(&axis);
  return Eigen::Vector3d::Unit(axis);
}

}  // namespace

std::optional<DopplerCircle> build_doppler_circle(
    const Eigen::Vector3d& velocity, double doppler, int n_dirs,
    const std::optional<Eigen::Vector3d>& in_plane_ref,
    DopplerCircleJacobian* jac) {
  if (n_dirs < 1) throw std::invalid_argument("circle needs at least one direction");
  const double speed = velocity.norm();
  if (speed < 1e-12) throw std::invalid_argument("velocity magnitude is zero");

  const double cos_t = doppler / speed;
  const double sin_sq = 1.0 - cos_t * cos_t;
  if (sin_sq < -1e-12) return std::nullopt;  // no direction matches this rate

  DopplerCircle circle;
  circle.speed = speed;
  circle.cos_theta = cos_t;

  const Eigen::Vector3d vhat = velocity / speed;
  if (sin_sq < 1e-14) {
    // Tangent case: the circle collapses to the single direction +-vhat and
    // carries zero arc length, so it contributes nothing to integrals. The
    // construction is not differentiable here; report zero derivatives.
    circle.sin_theta = 0.0;
    circle.directions = {cos_t >= 0.0 ? vhat : Eigen::Vector3d(-vhat)};
    circle.arc_measure = 0.0;
    if (jac) {
      jac->ddir_dvel.assign(1, Eigen::Matrix3d::Zero());
      jac->darc_dvel.setZero();
    }
    return circle;
  }
  circle.sin_theta = std::sqrt(sin_sq);

  const Eigen::Vector3d ref = pick_reference_axis(vhat, in_plane_ref);
  if (jac) {
    std::vector<DualVec3> dirs;
    Dual3 arc;
    circle_directions<Dual3>(DualVec3::variable(velocity), doppler, ref, n_dirs,
                             &dirs, &arc);
    circle.directions.reserve(dirs.size());
    jac->ddir_dvel.reserve(dirs.size());
    for (const DualVec3& d : dirs) {
      circle.directions.push_back(d.value());
      jac->ddir_dvel.push_back(d.jacobian());
    }
    circle.arc_measure = arc.v;
    jac->darc_dvel = arc.g;
  } else {
    circle_directions<double>(velocity, doppler, ref, n_dirs, &circle.directions,
                              &circle.arc_measure);
  }
  return circle;
}

Eigen::Quaterniond so3_exp(const Eigen::Vector3d& axis_angle) {
  const double theta = axis_angle.norm();
  double half_sinc;  // sin(theta/2) / theta
  if (theta < 1e-6) {
    half_sinc = 0.5 - theta * theta / 48.0;
  } else {
    half_sinc = std::sin(0.5 * theta) / theta;
  }
  const Eigen::Vector3d v = half_sinc * axis_angle;
  return Eigen::Quaterniond(std::cos(0.5 * theta), v.x(), v.y(), v.z());
}

namespace {

// Rodrigues coefficients a(t) = sin(theta)/theta and b(t) = (1-cos)/theta^2
// as smooth functions of t = theta^2, so dual arithmetic stays well defined
// through theta == 0.
template <typename Scalar>
void rodrigues_coeffs(const Scalar& t, Scalar* a, Scalar* b) {
  if (t.v < 1e-8) {
    *a = Scalar(1.0) - t * Scalar(1.0 / 6.0) + t * t * Scalar(1.0 / 120.0);
    *b = Scalar(0.5) - t * Scalar(1.0 / 24.0) + t * t * Scalar(1.0 / 720.0);
  } else {
    const Scalar theta = sqrt(t);
    *a = sin(theta) / theta;
    *b = (Scalar(1.0) - cos(theta)) / t;
  }
}

}  // namespace

Eigen::Vector3d rotate_with_jacobian(const Eigen::Vector3d& axis_angle,
                                     const Eigen::Vector3d& u,
                                     Eigen::Matrix3d* dout_daxis) {
  if (!dout_daxis) return so3_exp(axis_angle) * u;

  const DualVec3 aa = DualVec3::variable(axis_angle);
  const DualVec3 uc(u);
  const Dual3 t = dot(aa, aa);
  Dual3 a, b;
  rodrigues_coeffs(t, &a, &b);
  const DualVec3 c1 = cross(aa, uc);
  const DualVec3 out = uc + a * c1 + b * cross(aa, c1);
  *dout_daxis = out.jacobian();
  return out.value();
}

void direction_to_az_el(const Eigen::Vector3d& dir, double* azimuth,
                        double* elevation) {
  *azimuth = std::atan2(dir.y(), dir.x());
  *elevation = std::asin(std::clamp(dir.z(), -1.0, 1.0));
}

}  // namespace rdf
