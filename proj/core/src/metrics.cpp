// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

namespace rdf {

NoiseFit fit_noise(const std::vector<RangeDopplerFrame>& frames,
                   const std::vector<double>& speeds,
                   const RadarConfig& config) {
  if (frames.size() != speeds.size()) {
    throw std::invalid_argument("fit_noise: one speed per frame required");
  }
  // Welford accumulation over noise-only cells.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const RangeDopplerFrame& frame = frames[f];
    for (int j = 0; j < frame.n_doppler; ++j) {
      // Margin of one Doppler bin keeps boundary columns (where the circle
      // degenerates but still carries signal) out of the fit.
      if (std::abs(config.doppler_value(j)) <=
          speeds[f] + config.doppler_resolution) {
        continue;
      }
      for (int i = 0; i < frame.n_range; ++i) {
        for (int k = 0; k < frame.n_antenna; ++k) {
          const double v = frame.at(i, j, k);
          ++n;
          const double d = v - mean;
          mean += d / static_cast<double>(n);
          m2 += d * (v - mean);
        }
      }
    }
  }
  if (n < 1000) {
    throw InsufficientData("fit_noise: need at least 1000 noise-only cells, got " +
                           std::to_string(n));
  }
  const double var = m2 / static_cast<double>(n - 1);
  if (mean <= 0.0 || var <= 0.0) {
    throw InsufficientData("fit_noise: noise cells have no positive spread");
  }
  NoiseFit fit;
  // Method of moments for X = scale * ChiSquare(dof):
  // E[X] = scale * dof, Var[X] = 2 * scale^2 * dof.
  fit.scale = var / (2.0 * mean);
  fit.dof = 2.0 * mean * mean / var;
  fit.n_samples = n;
  boost::math::chi_squared_distribution<double> dist(fit.dof);
  fit.threshold = fit.scale * boost::math::quantile(dist, 0.99);
  return fit;
}

Normalization compute_normalization_values(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("compute_normalization: empty dataset");
  }
  auto percentile = [&](double p) {
    const std::size_t idx = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(values.size() - 1),
                         p * static_cast<double>(values.size())));
    std::nth_element(values.begin(), values.begin() + idx, values.end());
    return values[idx];
  };
  Normalization norm;
  norm.lo = percentile(1e-5);    // 0.001%
  norm.hi = percentile(0.9999);  // 99.99%
  return norm;
}

Normalization compute_normalization(
    const std::vector<RangeDopplerFrame>& frames) {
  std::vector<double> values;
  std::size_t total = 0;
  for (const auto& f : frames) total += f.size();
  if (total == 0) {
    throw std::invalid_argument("compute_normalization: empty dataset");
  }
  values.reserve(total);
  for (const auto& f : frames) {
    values.insert(values.end(), f.cube.begin(), f.cube.end());
  }
  Normalization norm = compute_normalization_values(std::move(values));
  if (!(norm.hi > norm.lo)) {
    throw std::invalid_argument("compute_normalization: degenerate value range");
  }
  return norm;
}

void normalize_and_mask(std::vector<RangeDopplerFrame>* frames,
                        const NoiseFit& noise, const Normalization& norm) {
  for (RangeDopplerFrame& f : *frames) {
    for (std::size_t i = 0; i < f.cube.size(); ++i) {
      if (f.cube[i] < noise.threshold) f.mask[i] = 0;
      f.cube[i] = norm.apply(f.cube[i]);
    }
  }
}

Eigen::MatrixXd slice(const RangeDopplerFrame& frame, int k) {
  Eigen::MatrixXd m(frame.n_range, frame.n_doppler);
  for (int i = 0; i < frame.n_range; ++i) {
    for (int j = 0; j < frame.n_doppler; ++j) m(i, j) = frame.at(i, j, k);
  }
  return m;
}

MaskMatrix slice_mask(const RangeDopplerFrame& frame, int k) {
  MaskMatrix m(frame.n_range, frame.n_doppler);
  for (int i = 0; i < frame.n_range; ++i) {
    for (int j = 0; j < frame.n_doppler; ++j) {
      m(i, j) = frame.valid(i, j, k) ? 1 : 0;
    }
  }
  return m;
}

double masked_psnr(const Eigen::Ref<const Eigen::MatrixXd>& pred,
                   const Eigen::Ref<const Eigen::MatrixXd>& target,
                   const MaskMatrix& valid) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("masked_psnr: shape mismatch");
  }
  double se = 0.0;
  std::size_t n = 0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      if (valid.size() != 0 && valid(r, c) == 0) continue;
      const double d = pred(r, c) - target(r, c);
      se += d * d;
      ++n;
    }
  }
  if (n == 0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

EvalReport evaluate_frames(const std::vector<RangeDopplerFrame>& pred,
                           const std::vector<RangeDopplerFrame>& target) {
  if (pred.size() != target.size()) {
    throw std::invalid_argument("evaluate_frames: frame count mismatch");
  }
  EvalReport report;
  double ssim_sum = 0.0;
  double psnr_sum = 0.0;
  std::size_t psnr_n = 0;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].n_range != target[f].n_range ||
        pred[f].n_doppler != target[f].n_doppler ||
        pred[f].n_antenna != target[f].n_antenna) {
      throw std::invalid_argument("evaluate_frames: cube shape mismatch");
    }
    double f_ssim = 0.0;
    double f_psnr = 0.0;
    std::size_t f_psnr_n = 0;
    for (int k = 0; k < target[f].n_antenna; ++k) {
      const Eigen::MatrixXd p = slice(pred[f], k);
      const Eigen::MatrixXd t = slice(target[f], k);
      const MaskMatrix m = slice_mask(target[f], k);
      const double s = masked_ssim(p, t, m);
      const double q = masked_psnr(p, t, m);
      ssim_sum += s;
      f_ssim += s;
      ++report.n_slices;
      if (std::isinf(q)) {
        ++report.n_infinite_psnr;
      } else {
        psnr_sum += q;
        f_psnr += q;
        ++psnr_n;
        ++f_psnr_n;
      }
    }
    report.ssim_per_frame.push_back(f_ssim / target[f].n_antenna);
    report.psnr_per_frame.push_back(
        f_psnr_n > 0 ? f_psnr / static_cast<double>(f_psnr_n)
                     : std::numeric_limits<double>::infinity());
  }
  if (report.n_slices > 0) {
    report.mean_ssim = ssim_sum / static_cast<double>(report.n_slices);
  }
  report.mean_psnr = psnr_n > 0 ? psnr_sum / static_cast<double>(psnr_n)
                                : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace rdf
