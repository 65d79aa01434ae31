// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdf {

void masked_l1(const Eigen::Ref<const Eigen::VectorXd>& pred,
               const Eigen::Ref<const Eigen::VectorXd>& target,
               const uint8_t* mask, double scale, double* loss_sum,
               std::size_t* count, Eigen::VectorXd* dL_dpred) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("masked_l1: size mismatch");
  }
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (mask != nullptr && mask[i] == 0) continue;
    const double diff = pred[i] - target[i];
    *loss_sum += std::abs(diff);
    ++*count;
    if (dL_dpred != nullptr && diff != 0.0) {
      (*dL_dpred)[i] += diff > 0.0 ? scale : -scale;
    }
  }
}

double bce_occupancy_sum(const Eigen::Ref<const Eigen::VectorXd>& alpha_r,
                         const Eigen::Ref<const Eigen::VectorXd>& alpha_c,
                         double scale, Eigen::VectorXd* dL_dalpha_r) {
  if (alpha_r.size() != alpha_c.size()) {
    throw std::invalid_argument("bce_occupancy_sum: size mismatch");
  }
  constexpr double kEps = 1e-6;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < alpha_r.size(); ++i) {
    const double p = std::clamp(alpha_r[i], kEps, 1.0 - kEps);
    const double q = std::clamp(alpha_c[i], kEps, 1.0 - kEps);
    sum -= q * std::log(p) + (1.0 - q) * std::log1p(-p);
    if (dL_dalpha_r != nullptr && alpha_r[i] > kEps && alpha_r[i] < 1.0 - kEps) {
      (*dL_dalpha_r)[i] += scale * (p - q) / (p * (1.0 - p));
    }
  }
  return sum;
}

double loss_interlevel(const std::vector<double>& fine_bounds,
                       const Eigen::Ref<const Eigen::VectorXd>& w_fine,
                       const std::vector<double>& coarse_bounds,
                       const Eigen::Ref<const Eigen::VectorXd>& w_coarse,
                       double scale, Eigen::VectorXd* dL_dw_coarse) {
  const int nf = static_cast<int>(w_fine.size());
  const int nc = static_cast<int>(w_coarse.size());
  if (static_cast<int>(fine_bounds.size()) != nf + 1 ||
      static_cast<int>(coarse_bounds.size()) != nc + 1) {
    throw std::invalid_argument("loss_interlevel: bounds/weights mismatch");
  }
  double loss = 0.0;
  int j_lo = 0;  // first coarse interval that can still overlap
  for (int i = 0; i < nf; ++i) {
    const double fa = fine_bounds[i];
    const double fb = fine_bounds[i + 1];
    while (j_lo < nc && coarse_bounds[j_lo + 1] <= fa) ++j_lo;
    double bound = 0.0;
    int j_hi = j_lo;
    for (int j = j_lo; j < nc && coarse_bounds[j] < fb; ++j) {
      bound += w_coarse[j];
      j_hi = j + 1;
    }
    const double w = w_fine[i];
    if (w <= 1e-12) continue;  // term and its proposal gradient vanish
    const double excess = w - bound;
    if (excess <= 0.0) continue;
    loss += excess * excess / w;
    if (dL_dw_coarse != nullptr) {
      const double d = scale * (-2.0) * excess / w;
      for (int j = j_lo; j < j_hi; ++j) (*dL_dw_coarse)[j] += d;
    }
  }
  return loss;
}

double loss_normals_reference(const NormalField& normals,
                              const std::vector<Eigen::Vector3d>& xs,
                              const std::vector<Eigen::Vector3d>& targets,
                              double weight, GradientTape* tape) {
  if (xs.size() != targets.size()) {
    throw std::invalid_argument("loss_normals_reference: size mismatch");
  }
  if (xs.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  NormalField::Eval eval;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    normals.query(xs[i], &eval);
    const Eigen::Vector3d diff = eval.n - targets[i];
    loss += diff.squaredNorm() * inv_n;
    if (tape != nullptr) {
      normals.accumulate_gradient(xs[i], eval, (2.0 * weight * inv_n) * diff,
                                  tape, nullptr);
    }
  }
  return loss;
}

double loss_normals_gradient(const NormalField& normals,
                             const GeometryField& geometry,
                             const std::vector<Eigen::Vector3d>& xs,
                             const std::vector<double>& weights, double weight,
                             GradientTape* tape) {
  if (xs.size() != weights.size()) {
    throw std::invalid_argument("loss_normals_gradient: size mismatch");
  }
  if (xs.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  NormalField::Eval eval;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Eigen::Vector3d dalpha_dx = Eigen::Vector3d::Zero();
    geometry.query_alpha(xs[i], &dalpha_dx);
    const double norm = dalpha_dx.norm();
    if (norm < 1e-8) continue;  // no implied surface direction here
    const Eigen::Vector3d n_hat = -dalpha_dx / norm;
    normals.query(xs[i], &eval);
    const Eigen::Vector3d diff = eval.n - n_hat;
    loss += weights[i] * diff.squaredNorm() * inv_n;
    if (tape != nullptr) {
      normals.accumulate_gradient(
          xs[i], eval, (2.0 * weight * weights[i] * inv_n) * diff, tape,
          nullptr);
    }
  }
  return loss;
}

double loss_normals_orientation(const NormalField& normals,
                                const std::vector<Eigen::Vector3d>& xs,
                                const std::vector<double>& weights,
                                const std::vector<Eigen::Vector3d>& omegas,
                                double weight, GradientTape* tape) {
  if (xs.size() != weights.size() || xs.size() != omegas.size()) {
    throw std::invalid_argument("loss_normals_orientation: size mismatch");
  }
  if (xs.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  NormalField::Eval eval;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    normals.query(xs[i], &eval);
    const double facing = eval.n.dot(omegas[i]);
    if (facing <= 0.0) continue;
    loss += weights[i] * facing * facing * inv_n;
    if (tape != nullptr) {
      normals.accumulate_gradient(
          xs[i], eval, (2.0 * weight * weights[i] * facing * inv_n) * omegas[i],
          tape, nullptr);
    }
  }
  return loss;
}

namespace {

/// Central finite difference of a per-frame quantity, one-sided at the ends.
template <typename Get>
Eigen::Vector3d time_derivative(const Trajectory& traj, std::size_t i, Get get,
                                std::size_t* lo_out, std::size_t* hi_out) {
  const std::size_t n = traj.size();
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const std::size_t hi = i + 1 == n ? i : i + 1;
  *lo_out = lo;
  *hi_out = hi;
  const double dt = traj[hi].time - traj[lo].time;
  return (get(hi) - get(lo)) / dt;
}

}  // namespace

PoseRegTerms pose_regularizers(const Trajectory& trajectory,
                               const PoseRegConfig& cfg, GradientTape* tape) {
  PoseRegTerms terms;
  const std::size_t n = trajectory.size();
  if (n < 2) return terms;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double s = trajectory.scale();

  // Offset magnitudes.
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d dp = trajectory.delta_p(i);
    const Eigen::Vector3d dth = trajectory.delta_theta(i);
    const Eigen::Vector3d dv = trajectory.delta_v(i);
    terms.offsets += (dp.squaredNorm() + dth.squaredNorm() + dv.squaredNorm()) *
                     inv_n;
    if (tape != nullptr) {
      const double c = 2.0 * cfg.w_offsets * inv_n;
      trajectory.accumulate_offset_gradient(i, c * dp, c * dth, c * dv, tape);
    }
  }

  // Base-position derivative vs. offset-corrected velocity: the offsets must
  // not invent motion the positions do not show.
  auto base_p = [&](std::size_t k) { return trajectory[k].pose.position; };
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo, hi;
    const Eigen::Vector3d xdot = time_derivative(trajectory, i, base_p, &lo, &hi);
    const Eigen::Vector3d resid =
        xdot - (trajectory[i].velocity + trajectory.delta_v(i));
    terms.velocity += resid.squaredNorm() * inv_n;
    if (tape != nullptr) {
      trajectory.accumulate_offset_gradient(
          i, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
          (-2.0 * cfg.w_velocity * inv_n) * resid, tape);
    }
  }

  // Acceleration of the effective velocity.
  auto eff_v = [&](std::size_t k) {
    return Eigen::Vector3d(s * trajectory[k].velocity + trajectory.delta_v(k));
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo, hi;
    const Eigen::Vector3d a = time_derivative(trajectory, i, eff_v, &lo, &hi);
    terms.acceleration += a.squaredNorm() * inv_n;
    if (tape != nullptr && hi != lo) {
      const double dt = trajectory[hi].time - trajectory[lo].time;
      const Eigen::Vector3d g = (2.0 * cfg.w_acceleration * inv_n / dt) * a;
      trajectory.accumulate_offset_gradient(hi, Eigen::Vector3d::Zero(),
                                            Eigen::Vector3d::Zero(), g, tape);
      trajectory.accumulate_offset_gradient(lo, Eigen::Vector3d::Zero(),
                                            Eigen::Vector3d::Zero(), -g, tape);
    }
  }

  // Windowed kinematic consistency: displacement of the effective positions
  // vs. the trapezoid integral of the effective velocities.
  const int w = std::max(1, cfg.window);
  if (n > static_cast<std::size_t>(w)) {
    const std::size_t n_windows = n - static_cast<std::size_t>(w);
    const double inv_w = 1.0 / static_cast<double>(n_windows);
    auto eff_p = [&](std::size_t k) {
      return Eigen::Vector3d(s * trajectory[k].pose.position +
                             trajectory.delta_p(k));
    };
    for (std::size_t i = 0; i < n_windows; ++i) {
      const std::size_t j_end = i + static_cast<std::size_t>(w);
      Eigen::Vector3d integral = Eigen::Vector3d::Zero();
      for (std::size_t j = i; j < j_end; ++j) {
        const double dt = trajectory[j + 1].time - trajectory[j].time;
        integral += 0.5 * dt * (eff_v(j) + eff_v(j + 1));
      }
      const Eigen::Vector3d resid = (eff_p(j_end) - eff_p(i)) - integral;
      terms.kinematic += resid.squaredNorm() * inv_w;
      if (tape != nullptr) {
        const Eigen::Vector3d g = (2.0 * cfg.w_kinematic * inv_w) * resid;
        trajectory.accumulate_offset_gradient(j_end, g, Eigen::Vector3d::Zero(),
                                              Eigen::Vector3d::Zero(), tape);
        trajectory.accumulate_offset_gradient(i, -g, Eigen::Vector3d::Zero(),
                                              Eigen::Vector3d::Zero(), tape);
        for (std::size_t j = i; j < j_end; ++j) {
          const double dt = trajectory[j + 1].time - trajectory[j].time;
          trajectory.accumulate_offset_gradient(j, Eigen::Vector3d::Zero(),
                                                Eigen::Vector3d::Zero(),
                                                -0.5 * dt * g, tape);
          trajectory.accumulate_offset_gradient(j + 1, Eigen::Vector3d::Zero(),
                                                Eigen::Vector3d::Zero(),
                                                -0.5 * dt * g, tape);
        }
      }
    }
  }
  return terms;
}

}  // namespace rdf
