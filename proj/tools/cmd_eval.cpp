// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>

#include <rdfield/checkpoint_io.hpp>
#include <rdfield/image_io.hpp>
#include <rdfield/metrics.hpp>

#include "tool_common.hpp"

namespace rdftool {

int run_eval(const ToolContext& ctx, const std::string& dataset,
             const std::string& checkpoint, const std::string& out_dir,
             const std::string& antennas, const std::string& split) {
  const rdf::CheckpointInfo info = rdf::read_checkpoint_info(checkpoint);
  std::unique_ptr<FitSetup> setup =
      make_fit_setup(ctx, dataset, &info.field, antennas, nullptr);
  rdf::Trainer& trainer = *setup->trainer;
  rdf::load_checkpoint_params(checkpoint, trainer.registry());

  std::vector<std::size_t> ids;
  if (split == "test") {
    ids = trainer.test_ids();
  } else if (split == "train") {
    ids = trainer.train_ids();
  } else {
    throw std::runtime_error("--split must be train or test, got '" + split +
                             "'");
  }
  if (ids.empty()) {
    throw std::runtime_error("the dataset's split rule leaves no " + split +
                             " frames to evaluate");
  }
  const std::vector<int> antenna_list = expand_antennas(antennas);

  std::filesystem::create_directories(out_dir);
  const rdf::EvalReport report = trainer.evaluate(ids, antenna_list);

  // Per-antenna breakdown (includes antennas outside any trained subset).
  std::ostringstream per_antenna;
  per_antenna << "[";
  for (int k = 0; k < setup->train_config.radar.n_antenna; ++k) {
    const rdf::EvalReport r = trainer.evaluate(ids, {k});
    if (k) per_antenna << ",";
    per_antenna << "{\"antenna\":" << k << ",\"ssim\":" << r.mean_ssim
                << ",\"psnr\":" << r.mean_psnr << "}";
  }
  per_antenna << "]";

  // Side-by-side prediction | measurement strips for the first few frames.
  const rdf::Normalization norm = trainer.normalization();
  const std::size_t n_strips = std::min<std::size_t>(ids.size(), 4);
  for (std::size_t s = 0; s < n_strips; ++s) {
    const std::size_t id = ids[s];
    const rdf::RangeDopplerFrame pred = trainer.render_model_frame(id);
    const rdf::RangeDopplerFrame& meas = setup->loaded.data.frames[id];
    const int k = antenna_list.empty() ? 0 : antenna_list.front();
    Eigen::MatrixXd strip(pred.n_range, 2 * pred.n_doppler + 4);
    strip.setZero();
    const Eigen::MatrixXd p = rdf::slice(pred, k);
    const Eigen::MatrixXd m = rdf::slice(meas, k);
    for (int i = 0; i < pred.n_range; ++i) {
      for (int j = 0; j < pred.n_doppler; ++j) {
        strip(i, j) = norm.apply(p(i, j));
        strip(i, pred.n_doppler + 4 + j) = norm.apply(m(i, j));
      }
    }
    char name[64];
    std::snprintf(name, sizeof(name), "compare_%05zu_a%d.png", id, k);
    rdf::save_heatmap_png(std::filesystem::path(out_dir) / name, strip, 0.0,
                          1.0);
  }

  std::ofstream out(std::filesystem::path(out_dir) / "report.json");
  if (!out) throw std::runtime_error("cannot write eval report");
  out << "{\"split\":\"" << split
      << "\",\"overall\":" << eval_report_json(report)
      << ",\"per_antenna\":" << per_antenna.str() << "}\n";

  std::cout << "{\"split\":\"" << split << "\",\"ssim\":" << report.mean_ssim
            << ",\"psnr\":" << report.mean_psnr
            << ",\"n_slices\":" << report.n_slices << "}\n";
  return kOk;
}

}  // namespace rdftool
