// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <sstream>

#include <rdfield/calibration.hpp>
#include <rdfield/checkpoint_io.hpp>

#include "tool_common.hpp"

namespace rdftool {

int run_fit(const ToolContext& ctx, const std::string& dataset,
            const std::string& out_checkpoint, const std::string& log_path,
            const std::string& antennas, const std::string& resume) {
  std::ofstream log_file;
  std::ostream* log = &std::cerr;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw std::runtime_error("cannot create " + log_path);
    log = &log_file;
  }

  // Resuming restores the exact model shape the checkpoint was trained
  // with (including post-calibration bounds), so stage 1 and the scale
  // search are skipped.
  rdf::FieldConfig resumed_config;
  const bool resuming = !resume.empty();
  if (resuming) {
    resumed_config = rdf::read_checkpoint_info(resume).field;
  }
  std::unique_ptr<FitSetup> setup =
      make_fit_setup(ctx, dataset, resuming ? &resumed_config : nullptr,
                     antennas, log);
  rdf::Trainer& trainer = *setup->trainer;

  std::ostringstream extra;
  extra.precision(10);
  extra << "{";
  if (resuming) {
    rdf::load_checkpoint_params(resume, trainer.registry());
    std::cerr << "resumed from " << resume << "\n";
  } else {
    const rdf::TrainSummary stage1 = trainer.run_camera_stage();
    if (stage1.diverged) {
      std::cerr << "stage 1 diverged (non-finite loss)\n";
      return kNumericalError;
    }
    std::cerr << "stage 1 done: " << stage1.iterations
              << " iterations, loss " << stage1.final_loss << "\n";

    if (ctx.config.get_bool("scale.run", true)) {
      rdf::ScaleSearchConfig search =
          rdf::scale_search_from(ctx.config, setup->train_config.radar);
      search.radar.samples_per_ray = ctx.config.get_int(
          "scale.samples_per_ray", search.radar.samples_per_ray);
      search.radar.circle_samples = ctx.config.get_int(
          "scale.circle_samples", search.radar.circle_samples);
      search.seed = rdf::Rng::mix(ctx.seed, 0x5CA1EULL);
      search.n_workers = ctx.workers;
      const rdf::ScaleReport scale = rdf::optimize_scale(
          setup->field->geometry_camera, setup->trajectory,
          setup->loaded.data.frames, search);
      trainer.apply_metric_scale(scale.s_opt);
      std::cerr << "scale calibration: s = " << scale.s_opt << " (objective "
                << scale.objective_opt << ")\n";
      extra << "\"scale\":" << scale.s_opt << ",";
    }
    trainer.distill_geometry_to_radar();
  }

  const rdf::TrainSummary stage2 = trainer.run_radar_stage();
  if (stage2.diverged) {
    std::cerr << "stage 2 diverged (non-finite loss)\n";
    return kNumericalError;
  }
  std::cerr << "stage 2 done: " << stage2.iterations << " iterations, loss "
            << stage2.final_loss << "\n";
  trainer.blend_untrained_gains();

  const std::vector<std::size_t>& eval_ids = trainer.test_ids().empty()
                                                 ? trainer.train_ids()
                                                 : trainer.test_ids();
  const rdf::EvalReport heldout = trainer.evaluate(eval_ids);
  extra << "\"stage2_loss\":" << stage2.final_loss
        << ",\"heldout\":" << eval_report_json(heldout) << "}";

  rdf::save_checkpoint(out_checkpoint, trainer.registry(),
                       setup->field->config, extra.str());
  std::cerr << "held-out SSIM " << heldout.mean_ssim << ", PSNR "
            << heldout.mean_psnr << " dB over " << heldout.n_slices
            << " slices\n";
  std::cout << "{\"checkpoint\":\"" << out_checkpoint
            << "\",\"heldout_ssim\":" << heldout.mean_ssim
            << ",\"heldout_psnr\":" << heldout.mean_psnr << "}\n";
  return kOk;
}

}  // namespace rdftool
