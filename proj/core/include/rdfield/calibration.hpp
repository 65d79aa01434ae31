// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Metric scale recovery. Scaleless trajectories (e.g. from structure-from-
// motion) leave the range-Doppler render compressed or expanded relative to
// the measurements; a one-dimensional derivative-free search over the global
// scale, scored by SSIM against the measured frames, recovers the metric
// factor before any radar-side training starts.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rdfield/field.hpp"
#include "rdfield/geometry.hpp"
#include "rdfield/renderer.hpp"

namespace rdf {

/// The search could not find structure to lock onto (objective flat across
/// the whole scale range).
struct FailedCalibration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScaleSearchConfig {
  double s_min = 0.05;
  double s_max = 20.0;
  int grid_points = 33;    // coarse log-spaced stage
  double rel_tol = 1e-3;   // golden-section interval / midpoint
  int max_frames = 32;     // frames per objective evaluation (evenly spaced)
  RadarConfig radar;       // render settings for candidate frames
  uint64_t seed = 0;
  int n_workers = 0;       // 0 = default_worker_count()
};

/// Search trace: every (scale, objective) evaluation plus the endpoints.
struct ScaleReport {
  double s_init = 1.0;
  double s_opt = 1.0;
  double objective_opt = 0.0;
  std::vector<std::pair<double, double>> curve;  // sorted by scale
};

/// Recovers the metric scale of `trajectory` by rendering range-Doppler
/// frames from the camera occupancy (unit reflectance, unit gains) under
/// candidate scales and minimizing mean (1 - SSIM) against `frames`.
/// Coarse 33-point log grid, then golden-section refinement when the grid
/// finds an interior minimum. Throws FailedCalibration on a flat objective,
/// std::invalid_argument on bad inputs (< 10 frames, empty trajectory).
ScaleReport optimize_scale(const GeometryField& camera_geometry,
                           const Trajectory& trajectory,
                           const std::vector<RangeDopplerFrame>& frames,
                           const ScaleSearchConfig& config);

}  // namespace rdf
