// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Standalone calibration estimators: the metric-scale search (against a
// reconstructed camera geometry) and the noise-floor fit (from measured
// frames alone). Both read their inputs from disk and emit JSON reports.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include <rdfield/calibration.hpp>
#include <rdfield/checkpoint_io.hpp>
#include <rdfield/dataset_io.hpp>
#include <rdfield/image_io.hpp>
#include <rdfield/metrics.hpp>
#include <rdfield/train.hpp>

#include "tool_common.hpp"

namespace rdftool {
namespace {

/// Rasterizes the (scale, objective) search trace as a white-on-black
/// polyline over a log-scale axis, with the optimum marked by a dim column.
Eigen::MatrixXd curve_image(const rdf::ScaleReport& report, int rows,
                            int cols) {
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(rows, cols);
  const auto& curve = report.curve;
  if (curve.size() < 2) return img;
  const double lx0 = std::log(curve.front().first);
  const double lx1 = std::log(curve.back().first);
  double y0 = curve.front().second, y1 = y0;
  for (const auto& [s, obj] : curve) {
    y0 = std::min(y0, obj);
    y1 = std::max(y1, obj);
  }
  const double pad = std::max(1e-12, 0.05 * (y1 - y0));
  y0 -= pad;
  y1 += pad;
  const auto col_of = [&](double s) {
    const double t = (std::log(s) - lx0) / std::max(1e-12, lx1 - lx0);
    return std::clamp(static_cast<int>(t * (cols - 1) + 0.5), 0, cols - 1);
  };
  const auto row_of = [&](double obj) {
    const double t = (obj - y0) / (y1 - y0);  // low objective near the bottom
    return std::clamp(static_cast<int>((1.0 - t) * (rows - 1) + 0.5), 0,
                      rows - 1);
  };
  const int opt_col = col_of(report.s_opt);
  for (int r = 0; r < rows; ++r) img(r, opt_col) = 0.35;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const int c0 = col_of(curve[i].first), c1 = col_of(curve[i + 1].first);
    const int r0 = row_of(curve[i].second), r1 = row_of(curve[i + 1].second);
    const int steps = std::max({std::abs(c1 - c0), std::abs(r1 - r0), 1});
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      const int r = static_cast<int>(r0 + t * (r1 - r0) + 0.5);
      const int c = static_cast<int>(c0 + t * (c1 - c0) + 0.5);
      img(r, c) = 1.0;
    }
  }
  return img;
}

std::string scale_report_json(const rdf::ScaleReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "{\"s_init\":" << report.s_init << ",\"s_opt\":" << report.s_opt
      << ",\"objective_opt\":" << report.objective_opt << ",\"curve\":[";
  for (std::size_t i = 0; i < report.curve.size(); ++i) {
    if (i) out << ",";
    out << "[" << report.curve[i].first << "," << report.curve[i].second
        << "]";
  }
  out << "]}";
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << "\n";
}

}  // namespace

int run_calibrate_scale(const ToolContext& ctx, const std::string& dataset,
                        const std::string& checkpoint,
                        const std::string& out_json,
                        const std::string& out_png) {
  rdf::LoadedDataset loaded = rdf::read_dataset(dataset);

  // Field-only restore: the search applies candidate scales to the dataset's
  // published trajectory itself, so any fitted offsets stay out of the loop.
  const rdf::CheckpointInfo info = rdf::read_checkpoint_info(checkpoint);
  rdf::SceneField field(info.field);
  rdf::ParamRegistry registry;
  field.register_params(&registry);
  rdf::load_checkpoint_params(checkpoint, registry, rdf::BlockMatch::kSubset);

  rdf::ScaleSearchConfig search;
  const rdf::Config& cfg = ctx.config;
  search.s_min = cfg.get_double("scale.s_min", search.s_min);
  search.s_max = cfg.get_double("scale.s_max", search.s_max);
  search.grid_points = cfg.get_int("scale.grid_points", search.grid_points);
  search.rel_tol = cfg.get_double("scale.rel_tol", search.rel_tol);
  search.max_frames = cfg.get_int("scale.max_frames", search.max_frames);
  search.radar = loaded.manifest.radar;
  if (cfg.has("scale.samples_per_ray")) {
    search.radar.samples_per_ray = cfg.get_int("scale.samples_per_ray", 0);
  }
  if (cfg.has("scale.circle_samples")) {
    search.radar.circle_samples = cfg.get_int("scale.circle_samples", 0);
  }
  search.radar.validate();
  search.seed = rdf::Rng::mix(ctx.seed, 0x5CA1EULL);
  search.n_workers = ctx.workers;

  const rdf::ScaleReport report = rdf::optimize_scale(
      field.geometry_camera, loaded.data.trajectory, loaded.data.frames,
      search);

  const std::string json = scale_report_json(report);
  if (!out_json.empty()) write_text(out_json, json);
  if (!out_png.empty()) {
    rdf::save_heatmap_png(out_png, curve_image(report, 256, 512), 0.0, 1.0);
  }
  std::cout << json << "\n";
  return kOk;
}

int run_fit_noise(const ToolContext& /*ctx*/, const std::string& dataset,
                  const std::string& out_json, double scale_hint) {
  if (!(scale_hint > 0.0)) {
    throw std::runtime_error("--scale must be positive");
  }
  rdf::LoadedDataset loaded = rdf::read_dataset(dataset);

  // The Doppler axis of the measurements is metric; scaleless trajectories
  // need the metric factor supplied (or re-estimated via calibrate-scale)
  // for the signal-free-column cut to land in the right place.
  std::vector<double> speeds;
  speeds.reserve(loaded.data.trajectory.size());
  for (std::size_t i = 0; i < loaded.data.trajectory.size(); ++i) {
    speeds.push_back(
        rdf::sensor_state(loaded.data.trajectory, i).velocity.norm() *
        scale_hint);
  }

  const rdf::NoiseFit fit =
      rdf::fit_noise(loaded.data.frames, speeds, loaded.manifest.radar);

  std::size_t cells = 0, above = 0;
  for (const auto& frame : loaded.data.frames) {
    for (double v : frame.cube) {
      ++cells;
      above += v > fit.threshold ? 1 : 0;
    }
  }

  std::ostringstream out;
  out.precision(10);
  out << "{\"scale\":" << fit.scale << ",\"dof\":" << fit.dof
      << ",\"threshold\":" << fit.threshold
      << ",\"n_samples\":" << fit.n_samples << ",\"above_threshold_rate\":"
      << (cells ? static_cast<double>(above) / cells : 0.0) << "}";
  if (!out_json.empty()) write_text(out_json, out.str());
  std::cout << out.str() << "\n";
  return kOk;
}

}  // namespace rdftool
