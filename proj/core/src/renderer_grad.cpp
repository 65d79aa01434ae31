// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode companions of the renderer. Forward results are recomputed
// here (same seeds, same sample placement) rather than retained, trading a
// second field evaluation for a flat memory profile.

#include <cmath>
#include <stdexcept>

#include "rdfield/renderer.hpp"
#include "renderer_internal.hpp"

namespace rdf {
namespace {

/// Backward of eval_radar_ray for one ray, given the gradient w.r.t. the
/// gain-free per-bin amplitudes. Parameter gradients go to the tape;
/// direction/origin chain terms accumulate into the optional vectors.
///
/// The per-bin mean distance is treated as constant (sample placement is
/// parameter independent), so its gradient is dropped.
void radar_ray_backward(const RadarSceneRefs& refs, const Eigen::Vector3d& origin,
                        const Eigen::Vector3d& omega,
                        const internal::RayEval& ray,
                        const Eigen::Ref<const Eigen::VectorXd>& dL_damp,
                        const RadarConfig& config, GradientTape* tape,
                        Eigen::Vector3d* dL_domega, Eigen::Vector3d* dL_dorigin) {
  const int nr = config.n_range;
  Eigen::VectorXd grad_bar_alpha = Eigen::VectorXd::Zero(nr);
  Eigen::VectorXd grad_bar_c = Eigen::VectorXd::Zero(nr);

  // Reverse sweep over non-empty bins. G accumulates the transmittance
  // chain: the sensitivity of all later bins to (1 - alpha_b)^2, kept in a
  // division-free product form.
  double g_chain = 0.0;
  for (int b = nr - 1; b >= 0; --b) {
    if (ray.count[b] == 0) continue;
    const double rc = internal::clamped_bin_range(ray.bar_r[b], config);
    const double inv_r2 = 1.0 / (rc * rc);
    const double k_b = ray.bar_c[b] * inv_r2;
    const double a = ray.bar_alpha[b];
    const double d_amp = dL_damp[b];
    grad_bar_alpha[b] =
        d_amp * k_b * ray.trans[b] - 2.0 * (1.0 - a) * ray.trans[b] * g_chain;
    grad_bar_c[b] = d_amp * a * ray.trans[b] * inv_r2;
    g_chain = d_amp * k_b * a + (1.0 - a) * (1.0 - a) * g_chain;
  }

  const bool with_appearance = refs.appearance != nullptr;
  Eigen::VectorXd dL_dcode =
      Eigen::VectorXd::Zero(refs.geometry->code_dim());
  for (const internal::SampleEval& s : ray.samples) {
    const double inv_n = 1.0 / ray.count[s.bin];
    const double dL_dalpha = grad_bar_alpha[s.bin] * inv_n;
    const double dL_dc = grad_bar_c[s.bin] * inv_n;
    const Eigen::Vector3d x = origin + s.t * omega;

    Eigen::Vector3d dL_dx = Eigen::Vector3d::Zero();
    const bool want_x = dL_domega != nullptr || dL_dorigin != nullptr;
    if (with_appearance) {
      Eigen::Vector3d dL_domega_s = Eigen::Vector3d::Zero();
      Eigen::Vector3d dL_dnormal = Eigen::Vector3d::Zero();
      dL_dcode.setZero();
      refs.appearance->accumulate_gradient(s.app, dL_dc, tape, &dL_dcode,
                                           &dL_domega_s, &dL_dnormal);
      Eigen::Vector3d dL_dx_n = Eigen::Vector3d::Zero();
      refs.normals->accumulate_gradient(x, s.normal, dL_dnormal, tape,
                                        want_x ? &dL_dx_n : nullptr);
      Eigen::Vector3d dL_dx_g = Eigen::Vector3d::Zero();
      refs.geometry->accumulate_gradient(x, s.geo, dL_dalpha, &dL_dcode, tape,
                                         want_x ? &dL_dx_g : nullptr);
      if (want_x) dL_dx = dL_dx_n + dL_dx_g;
      if (dL_domega != nullptr) *dL_domega += dL_domega_s;
    } else {
      Eigen::Vector3d dL_dx_g = Eigen::Vector3d::Zero();
      refs.geometry->accumulate_gradient(x, s.geo, dL_dalpha, nullptr, tape,
                                         want_x ? &dL_dx_g : nullptr);
      if (want_x) dL_dx = dL_dx_g;
      (void)dL_dc;  // reflectance is the constant 1
    }
    if (dL_dorigin != nullptr) *dL_dorigin += dL_dx;
    if (dL_domega != nullptr) *dL_domega += s.t * dL_dx;
  }
}

}  // namespace

void render_doppler_column_backward(const RadarSceneRefs& refs,
                                    const SensorState& state, int j, int k,
                                    const RadarConfig& config,
                                    const RaySampler& sampler, uint64_t seed,
                                    const Eigen::Ref<const Eigen::VectorXd>& dL_dY,
                                    GradientTape* tape, PoseGrad* pose_grad) {
  if (dL_dY.size() != config.n_range) {
    throw std::invalid_argument(
        "render_doppler_column_backward: gradient size mismatch");
  }
  const double speed = state.velocity.norm();
  if (speed < kMinSpeed) {
    throw std::invalid_argument("radar render: sensor speed is degenerate");
  }
  const bool want_pose = pose_grad != nullptr;
  DopplerCircleJacobian jac;
  const auto circle =
      build_doppler_circle(state.velocity, config.doppler_value(j),
                           config.circle_samples, std::nullopt,
                           want_pose ? &jac : nullptr);
  if (!circle || circle->arc_measure <= 0.0) return;  // column is all zero

  const double weight = circle->arc_measure / speed;
  // dL w.r.t. the gain-free amplitude of ray m is dL_dY[i] * weight * r_i *
  // gain_m; precompute the gain-free part once.
  Eigen::VectorXd wr(config.n_range);
  for (int i = 0; i < config.n_range; ++i) {
    wr[i] = dL_dY[i] * weight * config.range_center(i);
  }

  const Eigen::Quaterniond rot = state.rotation();
  const Eigen::Matrix3d rot_m = rot.toRotationMatrix();
  const Eigen::Matrix3d base_m = state.base_rotation.toRotationMatrix();

  const double t_near = internal::radar_t_near(config);
  const double t_far = config.max_range();
  std::vector<double> ts;
  internal::RayEval ray;
  Eigen::Vector3d dL_dvelocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d dL_dposition = Eigen::Vector3d::Zero();
  Eigen::Vector3d dL_dtheta = Eigen::Vector3d::Zero();
  double dL_dweight = 0.0;

  for (int m = 0; m < static_cast<int>(circle->directions.size()); ++m) {
    const Eigen::Vector3d& w = circle->directions[m];
    Rng rng = internal::ray_rng(seed, m);
    ts.clear();
    sampler.sample(state.position, w, t_near, t_far, config.samples_per_ray,
                   &rng, &ts);
    internal::eval_radar_ray(refs, state.position, w, ts, config, true, &ray);

    double gain = 1.0;
    AntennaGainModel::Eval gain_eval;
    Eigen::Vector3d dir_sensor = Eigen::Vector3d::Zero();
    if (refs.gains != nullptr) {
      dir_sensor = rot.conjugate() * w;
      refs.gains->query(k, dir_sensor, &gain_eval);
      gain = gain_eval.gain;
    }

    Eigen::Vector3d dL_dw = Eigen::Vector3d::Zero();
    radar_ray_backward(refs, state.position, w, ray, gain * wr, config, tape,
                       want_pose ? &dL_dw : nullptr,
                       want_pose ? &dL_dposition : nullptr);

    // base = sum_i dL_dY[i] * r_i * A0_m[i]; feeds both the gain gradient
    // (times weight) and the arc-weight gradient (times gain).
    double base = 0.0;
    for (int i = 0; i < config.n_range; ++i) {
      base += dL_dY[i] * config.range_center(i) * ray.amplitude[i];
    }
    if (refs.gains != nullptr) {
      Eigen::Vector3d dL_ddir = Eigen::Vector3d::Zero();
      refs.gains->accumulate_gradient(k, dir_sensor, gain_eval, weight * base,
                                      tape, want_pose ? &dL_ddir : nullptr);
      if (want_pose) {
        // dir_sensor = R_base^T exp(-delta_theta) w: chain into the world
        // direction and into the rotation offset.
        dL_dw += rot_m * dL_ddir;
        Eigen::Matrix3d rot_jac;
        rotate_with_jacobian(-state.delta_theta, w, &rot_jac);
        dL_dtheta -= rot_jac.transpose() * (base_m * dL_ddir);
      }
    }
    dL_dweight += gain * base;

    if (want_pose) {
      dL_dvelocity += jac.ddir_dvel[m].transpose() * dL_dw;
    }
  }

  if (want_pose) {
    // weight = arc_measure / speed.
    const Eigen::Vector3d v_hat = state.velocity / speed;
    dL_dvelocity += (dL_dweight / speed) * jac.darc_dvel;
    dL_dvelocity -= (dL_dweight * circle->arc_measure / (speed * speed)) * v_hat;
    pose_grad->dposition += dL_dposition;
    pose_grad->dtheta += dL_dtheta;
    pose_grad->dvelocity += dL_dvelocity;
  }
}

void render_camera_ray_backward(const CameraSceneRefs& refs,
                                const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& dir,
                                const std::vector<double>& ts,
                                const Eigen::Vector3d& dL_drgb,
                                GradientTape* tape) {
  const bool with_appearance = refs.appearance != nullptr;
  // Recompute the forward pass, retaining per-sample state.
  struct Hit {
    double t;
    double trans;  // transmittance before this sample
    GeometryField::Sample geo;
    CameraAppearance::Eval app;
  };
  std::vector<Hit> hits;
  hits.reserve(ts.size());
  double trans = 1.0;
  for (double t : ts) {
    const Eigen::Vector3d x = origin + t * dir;
    Hit h;
    h.t = t;
    refs.geometry->query(x, &h.geo, with_appearance);
    if (h.geo.alpha <= 0.0) continue;
    h.trans = trans;
    if (with_appearance) refs.appearance->query(h.geo.code, dir, &h.app);
    trans *= 1.0 - h.geo.alpha;
    hits.push_back(std::move(h));
  }

  // Reverse sweep: per-sample color gradient plus the division-free
  // transmittance chain for alpha (single power, unlike radar).
  double g_chain = 0.0;
  Eigen::VectorXd dL_dcode =
      Eigen::VectorXd::Zero(refs.geometry->code_dim());
  for (int i = static_cast<int>(hits.size()) - 1; i >= 0; --i) {
    const Hit& h = hits[static_cast<std::size_t>(i)];
    const double w = h.geo.alpha * h.trans;
    double color_dot;  // dL_drgb . c_i
    if (with_appearance) {
      dL_dcode.setZero();
      refs.appearance->accumulate_gradient(h.app, w * dL_drgb, tape, &dL_dcode);
      color_dot = dL_drgb.dot(h.app.rgb);
    } else {
      color_dot = dL_drgb.sum();
    }
    const double dL_dalpha = color_dot * h.trans - h.trans * g_chain;
    g_chain = color_dot * h.geo.alpha + (1.0 - h.geo.alpha) * g_chain;
    const Eigen::Vector3d x = origin + h.t * dir;
    refs.geometry->accumulate_gradient(x, h.geo, dL_dalpha,
                                       with_appearance ? &dL_dcode : nullptr,
                                       tape, nullptr);
  }
}

}  // namespace rdf
