// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared machinery between the forward renderer and its reverse-mode pass.
// Both passes must evaluate identical sample sets, so everything that decides
// sample placement or evaluation order lives here.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rdfield/renderer.hpp"

namespace rdf {
namespace internal {

/// Radar rays sample a fixed interval so sample positions never depend on
/// learnable parameters (keeps analytic gradients exact): [half a range bin,
/// max range).
inline double radar_t_near(const RadarConfig& config) {
  return 0.5 * config.range_resolution;
}

/// Floor applied to the per-bin mean distance before the inverse-square
/// factor, preventing a blow-up for samples hugging the sensor. The clamp
/// uses a zero subgradient.
inline double clamped_bin_range(double mean_r, const RadarConfig& config) {
  return std::max(mean_r, 0.25 * config.range_resolution);
}

/// One evaluated sample along a radar ray.
struct SampleEval {
  double t = 0.0;
  int bin = -1;
  GeometryField::Sample geo;
  NormalField::Eval normal;
  RadarAppearance::Eval app;
  double c = 1.0;  // reflectance (1 when no appearance model)
};

/// Per-bin aggregates and gain-free amplitudes of one radar ray.
struct RayEval {
  Eigen::VectorXd bar_alpha;  // mean alpha per bin
  Eigen::VectorXd bar_c;     // mean reflectance per bin
  Eigen::VectorXd bar_r;     // mean sample distance per bin
  Eigen::VectorXi count;     // samples per bin
  Eigen::VectorXd trans;     // squared transmittance at entry of each bin
  Eigen::VectorXd amplitude; // (bar_c * bar_alpha / r^2) * trans, gain-free
  std::vector<SampleEval> samples;  // populated when keep_samples
};

/// Evaluates one radar ray: queries the fields at every sample, averages per
/// range bin, composites with squared transmittance. Samples at or beyond
/// max range are ignored. Gain is NOT applied (it is linear and antenna
/// specific, so callers multiply it in).
void eval_radar_ray(const RadarSceneRefs& refs, const Eigen::Vector3d& origin,
                    const Eigen::Vector3d& omega, const std::vector<double>& ts,
                    const RadarConfig& config, bool keep_samples, RayEval* out);

/// The shared radar compositing core over already-averaged bins:
/// amplitude_b = bar_c_b * bar_alpha_b / clamped(bar_r_b)^2 * T_b with the
/// squared transmittance T recurrence. `trans` (when non-null) receives T at
/// each bin's entry. Model and ground-truth renders both route through here.
void composite_bins(const Eigen::VectorXd& bar_alpha,
                    const Eigen::VectorXd& bar_c, const Eigen::VectorXd& bar_r,
                    const Eigen::VectorXi& count, const RadarConfig& config,
                    Eigen::VectorXd* amplitude, Eigen::VectorXd* trans);

/// Per-ray RNG stream for direction m of a (frame seed, column) pair.
inline Rng ray_rng(uint64_t column_seed, int direction) {
  return Rng(Rng::mix(column_seed, 0x9e3779b97f4a7c15ULL + direction));
}

/// Column seed used by render_frame so per-column renders can be reproduced
/// in isolation.
inline uint64_t column_seed(uint64_t frame_seed, int j) {
  return Rng::mix(frame_seed, 0xc2b2ae3d27d4eb4fULL + j);
}

}  // namespace internal
}  // namespace rdf
