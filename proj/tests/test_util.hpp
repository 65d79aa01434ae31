// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit tests: finite-difference gradient checking
// against the tape, and small model builders so individual cases stay short.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <rdfield/field.hpp>
#include <rdfield/params.hpp>
#include <rdfield/rng.hpp>

namespace rdtest {

/// Relative disagreement with an absolute floor, so two near-zero gradients
/// compare as equal instead of dividing by noise.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of `loss` with respect to the scalar at `p`.
inline double finite_difference(double* p, double h,
                                const std::function<double()>& loss) {
  const double saved = *p;
  *p = saved + h;
  const double up = loss();
  *p = saved - h;
  const double down = loss();
  *p = saved;
  return (up - down) / (2.0 * h);
}

/// Compares every entry of an accumulated tape against central differences
/// of `loss` and returns the worst relative error. `indices` empty = all
/// registered parameters (fine for small models only).
inline double worst_grad_error(const rdf::ParamRegistry& registry,
                               const rdf::GradientTape& tape,
                               const std::function<double()>& loss,
                               std::vector<std::size_t> indices = {},
                               double h = 1e-5) {
  if (indices.empty()) {
    indices.resize(registry.total_size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }
  double worst = 0.0;
  for (std::size_t i : indices) {
    const double fd = finite_difference(registry.param_ptr(i), h, loss);
    worst = std::max(worst, rel_err(tape.grad()[static_cast<long>(i)], fd));
  }
  return worst;
}

/// A small field shape that keeps test models cheap but exercises every
/// component (two grid levels, BRDF bases, SH encoding, two antennas).
inline rdf::FieldConfig small_field_config() {
  rdf::FieldConfig config;
  config.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-2, -2, -1),
                                      Eigen::Vector3d(2, 2, 1));
  config.resolutions = {4, 8};
  config.feature_dim = 2;
  config.code_dim = 5;
  config.sh_degree = 2;
  config.brdf_count = 4;
  config.n_antenna = 2;
  config.gain_azimuth = 8;
  config.gain_elevation = 4;
  config.normal_resolutions = {4};
  config.density_bias_init = -1.0;
  return config;
}

}  // namespace rdtest
