// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace rdf {

using MaskMatrix = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Filtered fields retained from an SSIM forward pass so the backward pass
/// can reuse them.
struct SsimTerms {
  Eigen::ArrayXXd mu_a, mu_b;    // Gaussian-filtered means
  Eigen::ArrayXXd p_aa, p_bb, p_ab;  // Gaussian-filtered a*a, b*b, a*b
  Eigen::ArrayXXd map;           // per-pixel structural similarity
};

/// 11x11 Gaussian (sigma 1.5) structural similarity, stabilizers for a unit
/// dynamic range. Borders use reflected indexing. Returns the map mean over
/// pixels where `valid` is nonzero (`valid` may be empty = all valid);
/// returns 1.0 when nothing is valid (identical-by-vacuity convention).
double masked_ssim(const Eigen::Ref<const Eigen::MatrixXd>& a,
                   const Eigen::Ref<const Eigen::MatrixXd>& b,
                   const MaskMatrix& valid, SsimTerms* terms = nullptr);

/// d(masked_ssim)/da, scaled by `dL_dssim`, accumulated into `dL_da` (which
/// must be pre-sized and is NOT zeroed). `terms` must come from the matching
/// forward call.
void masked_ssim_backward(const Eigen::Ref<const Eigen::MatrixXd>& a,
                          const Eigen::Ref<const Eigen::MatrixXd>& b,
                          const MaskMatrix& valid, const SsimTerms& terms,
                          double dL_dssim, Eigen::MatrixXd* dL_da);

/// Separable Gaussian filtering with reflected borders (exposed for tests).
void gaussian_filter(const Eigen::ArrayXXd& in, Eigen::ArrayXXd* out);
/// Exact adjoint of gaussian_filter; accumulates into `gin`.
void gaussian_filter_adjoint(const Eigen::ArrayXXd& gout, Eigen::ArrayXXd* gin);

}  // namespace rdf
