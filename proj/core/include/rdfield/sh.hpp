// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace rdf {

/// Highest supported band of the real spherical-harmonics view encoding.
/// Higher bands would need more hand-derived polynomials; configs requesting
/// them are rejected at load time.
inline constexpr int kShMaxDegree = 4;

/// Number of basis values for bands 0..degree inclusive: (degree + 1)^2.
int sh_basis_size(int degree);

/// Evaluates the real spherical-harmonics basis at a unit direction.
/// `out` must hold sh_basis_size(degree) values. When `jac` is non-null it
/// is resized to (basis_size x 3) and receives the ambient partial
/// derivatives d(basis)/d(dir); chained with tangent perturbations of a unit
/// direction these give exact spherical derivatives.
void eval_sh(int degree, const Eigen::Vector3d& dir, double* out,
             Eigen::Matrix<double, Eigen::Dynamic, 3>* jac = nullptr);

}  // namespace rdf
