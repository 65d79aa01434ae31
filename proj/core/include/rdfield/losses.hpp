// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rdfield/field.hpp"
#include "rdfield/geometry.hpp"
#include "rdfield/params.hpp"

namespace rdf {

/// Masked L1: adds sum |pred - target| over valid cells into *loss_sum and
/// the valid-cell count into *count. When dL_dpred is non-null it receives
/// scale * sign(pred - target) per valid cell (callers divide by the total
/// count to turn sums into means).
void masked_l1(const Eigen::Ref<const Eigen::VectorXd>& pred,
               const Eigen::Ref<const Eigen::VectorXd>& target,
               const uint8_t* mask, double scale, double* loss_sum,
               std::size_t* count, Eigen::VectorXd* dL_dpred);

/// Binary cross-entropy sum matching radar occupancy (prediction) against
/// camera occupancy (target, treated as constant). Predictions are clamped
/// to [eps, 1 - eps] with eps = 1e-6; targets are clamped the same way.
/// `dL_dalpha_r` accumulates scale * d(sum)/d(alpha_r).
double bce_occupancy_sum(const Eigen::Ref<const Eigen::VectorXd>& alpha_r,
                         const Eigen::Ref<const Eigen::VectorXd>& alpha_c,
                         double scale, Eigen::VectorXd* dL_dalpha_r);

/// Interlevel supervision of one proposal level against the field's
/// (stop-grad) weights along one ray:
///   loss = sum_i (1 / w_i) * max(0, w_i - bound_i)^2
/// over fine intervals, where bound_i sums the proposal weights of every
/// coarse interval overlapping fine interval i. Gradients flow to the
/// proposal weights only (accumulated into dL_dw_coarse, scaled by `scale`).
double loss_interlevel(const std::vector<double>& fine_bounds,
                       const Eigen::Ref<const Eigen::VectorXd>& w_fine,
                       const std::vector<double>& coarse_bounds,
                       const Eigen::Ref<const Eigen::VectorXd>& w_coarse,
                       double scale, Eigen::VectorXd* dL_dw_coarse);

/// Mean squared error between field normals and reference normals; gradient
/// (scaled by `weight`) flows into the normal field.
double loss_normals_reference(const NormalField& normals,
                              const std::vector<Eigen::Vector3d>& xs,
                              const std::vector<Eigen::Vector3d>& targets,
                              double weight, GradientTape* tape);

/// Ties field normals to the (stop-grad) density-gradient direction
/// n_hat = -grad(alpha)/|grad(alpha)|: mean of w_i |n - n_hat|^2. Points with
/// a vanishing density gradient are skipped.
double loss_normals_gradient(const NormalField& normals,
                             const GeometryField& geometry,
                             const std::vector<Eigen::Vector3d>& xs,
                             const std::vector<double>& weights, double weight,
                             GradientTape* tape);

/// Penalizes normals facing away from the sensor: mean of
/// w_i * max(0, n . omega)^2 (omega is the ray direction at the point).
double loss_normals_orientation(const NormalField& normals,
                                const std::vector<Eigen::Vector3d>& xs,
                                const std::vector<double>& weights,
                                const std::vector<Eigen::Vector3d>& omegas,
                                double weight, GradientTape* tape);

/// Weights and window of the trajectory regularizers.
struct PoseRegConfig {
  double w_offsets = 1e-3;      // ||dp||^2 + ||dtheta||^2 + ||dv||^2
  double w_velocity = 1.0;      // finite-difference position vs. velocity
  double w_acceleration = 5e-3; // finite-difference acceleration magnitude
  double w_kinematic = 1.0;     // windowed displacement vs. integrated velocity
  int window = 15;              // frames per kinematic window
};

struct PoseRegTerms {
  double offsets = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double kinematic = 0.0;

  double weighted(const PoseRegConfig& cfg) const {
    return cfg.w_offsets * offsets + cfg.w_velocity * velocity +
           cfg.w_acceleration * acceleration + cfg.w_kinematic * kinematic;
  }
};

/// Evaluates the four trajectory regularizers (each a mean over frames or
/// windows) and accumulates their weighted gradients into the trajectory's
/// offset block. Scale is treated as constant here.
PoseRegTerms pose_regularizers(const Trajectory& trajectory,
                               const PoseRegConfig& cfg, GradientTape* tape);

}  // namespace rdf
