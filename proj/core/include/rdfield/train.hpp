// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage fitting. Stage 1 trains the camera geometry + color from RGB
// images (with the hierarchical proposal sampler trained online). Between
// stages the camera geometry is distilled into the radar geometry and the
// global metric scale can be calibrated. Stage 2 trains the radar geometry,
// reflectance, normals, and antenna gains against measured range-Doppler
// frames, optionally refining per-frame pose/velocity offsets.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "rdfield/calibration.hpp"
#include "rdfield/field.hpp"
#include "rdfield/geometry.hpp"
#include "rdfield/losses.hpp"
#include "rdfield/metrics.hpp"
#include "rdfield/optim.hpp"
#include "rdfield/renderer.hpp"
#include "rdfield/sampler.hpp"
#include "rdfield/synth.hpp"

namespace rdf {

struct TrainWeights {
  double radar_l1 = 1.0;
  double radar_ssim = 0.25;        // applied every ssim_every iterations
  double camera_l1 = 1.0;
  double interlevel = 0.01;
  double bce = 0.01;               // radar-vs-camera occupancy coupling
  double normals_gradient = 3e-3;  // normals vs density-gradient direction
  double normals_orientation = 1e-3;
  PoseRegConfig pose_reg;
};

struct StageSchedule {
  int iterations = 400;
  double lr_begin = 1e-2;
  double lr_end = 1e-4;
};

struct TrainConfig {
  RadarConfig radar;
  CameraIntrinsics camera;
  int camera_samples_per_ray = 48;
  int proposal_coarse = 24;     // per-level proposal sample counts
  int proposal_fine = 32;
  int rays_per_batch = 512;     // stage-1 pixel rays per iteration
  int columns_per_batch = 96;   // stage-2 Doppler columns per iteration
  int proposal_rays = 16;       // rays per iteration carrying interlevel loss
  int bce_samples = 512;
  int normal_samples = 192;
  int ssim_every = 10;
  StageSchedule stage1{400, 1e-2, 1e-3};
  StageSchedule stage2{600, 1e-2, 1e-4};
  double lr_pose_begin = 1e-3;
  double lr_pose_end = 1e-4;
  bool train_pose = true;
  /// Ablation: render radar from the frozen camera geometry instead of the
  /// dedicated radar geometry ("shared geometry off").
  bool use_camera_geometry_for_radar = false;
  std::vector<int> train_antennas;  // empty = all antennas
  double train_fraction = 0.8;      // leading fraction of frames trained on
  /// Explicit frame split (e.g. a manifest's spatial split). When non-empty
  /// it replaces the temporal `train_fraction` rule; the two lists must
  /// partition [0, n_frames) exactly.
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  int log_every = 10;
  TrainWeights weights;
  uint64_t seed = 0;
  int n_workers = 0;                // 0 = default_worker_count()
  std::ostream* log = nullptr;      // JSON-lines sink, optional
};

struct TrainSummary {
  bool diverged = false;  // non-finite loss encountered; training stopped
  int iterations = 0;
  double final_loss = 0.0;
};

/// Builds the sensor state of trajectory frame i with the learnable rotation
/// offset kept separate, so reverse-mode pose gradients are taken w.r.t. the
/// stored offset parameters.
SensorState sensor_state(const Trajectory& trajectory, std::size_t i);

/// Owns the parameter registry, tape, proposal fields, and normalized
/// training targets for one fit. The field and trajectory are borrowed and
/// updated in place.
class Trainer {
 public:
  Trainer(SceneField* field, Trajectory* trajectory, const Dataset& dataset,
          const TrainConfig& config);
  ~Trainer();

  TrainSummary run_camera_stage();
  /// Copies the trained camera geometry into the radar geometry (values
  /// only; parameter registration is untouched).
  void distill_geometry_to_radar();
  TrainSummary run_radar_stage();

  /// Fits the noise model and normalization from the training frames and
  /// builds the masked targets. Radar training calls this on demand; it is
  /// exposed so evaluation can run without training.
  void prepare_radar_targets();

  const std::vector<std::size_t>& train_ids() const { return train_ids_; }
  const std::vector<std::size_t>& test_ids() const { return test_ids_; }
  const Normalization& normalization() const { return norm_; }
  const NoiseFit& noise() const { return noise_; }
  ParamRegistry& registry() { return registry_; }

  /// Raw-amplitude model render of one dataset frame (all antennas).
  RangeDopplerFrame render_model_frame(std::size_t frame_id) const;

  /// Renders the given frames, normalizes, and scores them against the
  /// (masked) measurements, optionally restricted to an antenna subset.
  EvalReport evaluate(const std::vector<std::size_t>& frame_ids,
                      const std::vector<int>& antennas = {});

  /// Copies the mean log-gain of the trained antennas into every antenna
  /// outside `config.train_antennas`, as the symmetric prior for antennas
  /// never seen during training. No-op when all antennas were trained.
  void blend_untrained_gains();

  /// Locks in a recovered metric scale: sets the trajectory scale and
  /// stretches every spatial grid's bounds by `s` (vertex values are
  /// untouched, so the scaleless camera-stage fields carry over exactly).
  void apply_metric_scale(double s);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SceneField* field_;
  Trajectory* trajectory_;
  const Dataset& dataset_;
  TrainConfig config_;
  ParamRegistry registry_;
  Normalization norm_;
  NoiseFit noise_;
  std::vector<RangeDopplerFrame> targets_;  // normalized + masked copies
  bool targets_ready_ = false;
  std::vector<std::size_t> train_ids_;
  std::vector<std::size_t> test_ids_;
};

struct PipelineConfig {
  TrainConfig train;
  ScaleSearchConfig scale_search;
  bool run_scale_calibration = true;
};

struct PipelineResult {
  TrainSummary stage1;
  TrainSummary stage2;
  ScaleReport scale;
  EvalReport heldout;
  bool diverged = false;
};

/// The full fit: camera stage, scale calibration (optional), distillation,
/// radar stage, held-out evaluation.
PipelineResult run_fit_pipeline(SceneField* field, Trajectory* trajectory,
                                const Dataset& dataset,
                                const PipelineConfig& config);

}  // namespace rdf
