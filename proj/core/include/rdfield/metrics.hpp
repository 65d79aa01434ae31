// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rdfield/renderer.hpp"
#include "rdfield/ssim.hpp"

namespace rdf {

/// Thrown when an estimator is asked to work from too few samples.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scaled chi-square noise model fitted to measurement cells that physics
/// says must be signal-free.
struct NoiseFit {
  double scale = 0.0;      // multiplier on the chi-square variate
  double dof = 0.0;        // (possibly fractional) degrees of freedom
  double threshold = 0.0;  // 99% quantile of the fitted distribution
  std::size_t n_samples = 0;
};

/// Fits the noise model by the method of moments over all cells whose
/// Doppler bin exceeds the frame speed (no direction can produce such a
/// closing rate, so those columns contain noise only). `speeds[f]` is the
/// sensor speed of frames[f]. Throws InsufficientData below 1000 cells.
NoiseFit fit_noise(const std::vector<RangeDopplerFrame>& frames,
                   const std::vector<double>& speeds, const RadarConfig& config);

/// Affine map onto [0,1] fixed by robust percentiles of a dataset.
struct Normalization {
  double lo = 0.0;
  double hi = 1.0;

  double apply(double v) const {
    const double t = (v - lo) / (hi - lo);
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  }
  /// Linear-only version (no clipping), used on predictions so gradients
  /// survive out-of-range values.
  double apply_linear(double v) const { return (v - lo) / (hi - lo); }
};

/// Percentiles 0.001% and 99.99% over every cube cell of the dataset.
Normalization compute_normalization(const std::vector<RangeDopplerFrame>& frames);

/// Same percentiles over a raw value set (takes a copy: selection mutates).
/// May return a degenerate range (hi == lo) when all values are equal;
/// callers that cannot tolerate that must check.
Normalization compute_normalization_values(std::vector<double> values);

/// Clips + rescales all cube values into [0,1] using `norm` and clears the
/// mask of cells below the fitted noise threshold (threshold compared in
/// raw units, before normalization).
void normalize_and_mask(std::vector<RangeDopplerFrame>* frames,
                        const NoiseFit& noise, const Normalization& norm);

/// Extracts antenna slice k as a (n_range x n_doppler) matrix / mask.
Eigen::MatrixXd slice(const RangeDopplerFrame& frame, int k);
MaskMatrix slice_mask(const RangeDopplerFrame& frame, int k);

/// Peak signal-to-noise ratio over valid cells of unit-range data:
/// 10 log10(1 / MSE); +infinity when the slices agree exactly.
double masked_psnr(const Eigen::Ref<const Eigen::MatrixXd>& pred,
                   const Eigen::Ref<const Eigen::MatrixXd>& target,
                   const MaskMatrix& valid);

/// Reconstruction quality over paired frame sets: SSIM and PSNR per
/// (frame, antenna) slice, plus means (infinite PSNR slices are counted
/// separately and excluded from the mean).
struct EvalReport {
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
  std::size_t n_slices = 0;
  std::size_t n_infinite_psnr = 0;
  std::vector<double> ssim_per_frame;  // averaged over antennas
  std::vector<double> psnr_per_frame;
};

EvalReport evaluate_frames(const std::vector<RangeDopplerFrame>& pred,
                           const std::vector<RangeDopplerFrame>& target);

}  // namespace rdf
