// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdfield/metrics.hpp"
#include "rdfield/ssim.hpp"
#include "rdfield/threading.hpp"

namespace rdf {
namespace {

Eigen::MatrixXd normalize_image(Eigen::MatrixXd img) {
  std::vector<double> values(img.data(), img.data() + img.size());
  const Normalization norm = compute_normalization_values(std::move(values));
  if (norm.hi > norm.lo) {
    for (int c = 0; c < img.cols(); ++c) {
      for (int r = 0; r < img.rows(); ++r) {
        img(r, c) = norm.apply(img(r, c));
      }
    }
  } else {
    img.setZero();  // flat image carries no structure
  }
  return img;
}

/// Mean (1 - SSIM) between candidate-scale renders and the measured frames.
class ScaleObjective {
 public:
  ScaleObjective(const GeometryField& geometry, const Trajectory& trajectory,
                 const std::vector<RangeDopplerFrame>& frames,
                 const ScaleSearchConfig& config)
      : geometry_(geometry), trajectory_(trajectory), config_(config) {
    render_config_ = config.radar;
    render_config_.n_antenna = 1;  // unit gains make every antenna identical
    const std::size_t n = std::min(trajectory.size(), frames.size());
    const int picks = std::max(2, std::min(config.max_frames,
                                           static_cast<int>(n)));
    for (int p = 0; p < picks; ++p) {
      const auto i = static_cast<std::size_t>(
          std::llround(static_cast<double>(p) * (n - 1) / (picks - 1)));
      if (!indices_.empty() && indices_.back() == i) continue;
      indices_.push_back(i);
      // Antenna-averaged measurement, normalized once up front.
      Eigen::MatrixXd img =
          Eigen::MatrixXd::Zero(frames[i].n_range, frames[i].n_doppler);
      for (int k = 0; k < frames[i].n_antenna; ++k) {
        img += slice(frames[i], k);
      }
      img /= frames[i].n_antenna;
      targets_.push_back(normalize_image(std::move(img)));
    }
  }

  double operator()(double s, int n_workers) const {
    const RadarSceneRefs refs{&geometry_, nullptr, nullptr, nullptr};
    const LinearSampler sampler(/*jitter=*/false);  // keep the 1-D objective smooth
    const MaskMatrix all_valid;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t p = 0; p < indices_.size(); ++p) {
      FrameState f = trajectory_[indices_[p]];
      f.pose.position *= s;
      f.velocity *= s;
      const auto frame = render_frame(
          refs, SensorState::from_frame(f), f.time, render_config_, sampler,
          Rng::mix(config_.seed, indices_[p]), n_workers);
      if (!frame) continue;
      const Eigen::MatrixXd img = normalize_image(slice(*frame, 0));
      acc += 1.0 - masked_ssim(img, targets_[p], all_valid);
      ++used;
    }
    if (used == 0) {
      throw FailedCalibration("optimize_scale: no frame could be rendered");
    }
    return acc / static_cast<double>(used);
  }

 private:
  const GeometryField& geometry_;
  const Trajectory& trajectory_;
  ScaleSearchConfig config_;
  RadarConfig render_config_;
  std::vector<std::size_t> indices_;
  std::vector<Eigen::MatrixXd> targets_;
};

}  // namespace

ScaleReport optimize_scale(const GeometryField& camera_geometry,
                           const Trajectory& trajectory,
                           const std::vector<RangeDopplerFrame>& frames,
                           const ScaleSearchConfig& config) {
  if (!(config.s_min > 0.0) || !(config.s_max > config.s_min)) {
    throw std::invalid_argument("optimize_scale: bad scale bounds");
  }
  if (config.grid_points < 3) {
    throw std::invalid_argument("optimize_scale: need at least 3 grid points");
  }
  if (frames.size() < 10 || trajectory.size() < 10) {
    throw std::invalid_argument("optimize_scale: need at least 10 frames");
  }
  const ScaleObjective objective(camera_geometry, trajectory, frames, config);
  const int workers =
      config.n_workers > 0 ? config.n_workers
                           : static_cast<int>(default_worker_count());

  ScaleReport report;
  const double log_lo = std::log(config.s_min);
  const double log_hi = std::log(config.s_max);
  const int n = config.grid_points;
  std::vector<double> grid_s(static_cast<std::size_t>(n));
  std::vector<double> grid_f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid_s[static_cast<std::size_t>(i)] =
        std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
  }
  // Candidate scales are independent; spread them over the workers and keep
  // each render single-threaded so the machine is not oversubscribed.
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t i) { grid_f[i] = objective(grid_s[i], 1); }, workers);
  for (int i = 0; i < n; ++i) {
    report.curve.emplace_back(grid_s[static_cast<std::size_t>(i)],
                              grid_f[static_cast<std::size_t>(i)]);
  }

  const auto best_it = std::min_element(grid_f.begin(), grid_f.end());
  const auto worst = *std::max_element(grid_f.begin(), grid_f.end());
  const int best = static_cast<int>(best_it - grid_f.begin());
  if (worst - *best_it < 1e-9) {
    throw FailedCalibration("optimize_scale: objective is flat across bounds");
  }

  double s_opt = grid_s[static_cast<std::size_t>(best)];
  double f_opt = *best_it;
  if (best > 0 && best + 1 < n) {
    // Golden-section refinement inside the bracketing grid cells, in log
    // space so the tolerance is relative.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(grid_s[static_cast<std::size_t>(best - 1)]);
    double b = std::log(grid_s[static_cast<std::size_t>(best + 1)]);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    auto eval = [&](double log_s) {
      const double s = std::exp(log_s);
      const double f = objective(s, workers);
      report.curve.emplace_back(s, f);
      return f;
    };
    double f1 = eval(x1);
    double f2 = eval(x2);
    while (b - a > std::log1p(config.rel_tol)) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = eval(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = eval(x2);
      }
    }
    const double log_best = f1 <= f2 ? x1 : x2;
    const double f_best = std::min(f1, f2);
    if (f_best <= f_opt) {
      s_opt = std::exp(log_best);
      f_opt = f_best;
    }
  }
  report.s_opt = std::clamp(s_opt, config.s_min, config.s_max);
  report.objective_opt = f_opt;
  std::sort(report.curve.begin(), report.curve.end());
  return report;
}

}  // namespace rdf
