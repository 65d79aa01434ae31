// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <rdfield/config.hpp>
#include <rdfield/dataset_io.hpp>
#include <rdfield/spec_io.hpp>
#include <rdfield/train.hpp>

namespace rdftool {

/// Stable CLI exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kNumericalError = 3;

/// State shared by every subcommand: the merged configuration (files <
/// environment < --set/flags) plus the resolved global knobs.
struct ToolContext {
  rdf::Config config;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = all cores
};

/// Merges config files in order, then applies --set overrides and the
/// --seed/--workers flags (flags also land in the config as "seed" and
/// "workers" so they are visible to key dumps).
ToolContext make_context(const std::vector<std::string>& config_files,
                         const std::vector<std::string>& sets,
                         const std::optional<std::uint64_t>& seed_flag,
                         const std::optional<int>& workers_flag);

/// Expands "0-3", "0,1,2,3", or a mix ("0-2,5") into an antenna id list.
std::vector<int> expand_antennas(const std::string& spec);

/// A dataset plus the model and trainer built against it, with ownership
/// arranged so the trainer's borrowed references stay valid. `field_config`
/// overrides the config-derived one when non-null (checkpoint restores).
struct FitSetup {
  rdf::LoadedDataset loaded;
  rdf::Trajectory trajectory;
  rdf::TrainConfig train_config;
  std::unique_ptr<rdf::SceneField> field;
  std::unique_ptr<rdf::Trainer> trainer;
};

std::unique_ptr<FitSetup> make_fit_setup(const ToolContext& ctx,
                                         const std::string& dataset_path,
                                         const rdf::FieldConfig* field_override,
                                         const std::string& antennas_spec,
                                         std::ostream* log);

/// EvalReport -> JSON object text.
std::string eval_report_json(const rdf::EvalReport& report);

// Subcommand entry points (wired by main). Each returns an exit code and
// reports errors via exceptions that main maps onto the code contract.
int run_simulate(const ToolContext& ctx, const std::string& out_dir);
int run_fit(const ToolContext& ctx, const std::string& dataset,
            const std::string& out_checkpoint, const std::string& log_path,
            const std::string& antennas, const std::string& resume);
int run_eval(const ToolContext& ctx, const std::string& dataset,
             const std::string& checkpoint, const std::string& out_dir,
             const std::string& antennas, const std::string& split);
int run_superresolve(const ToolContext& ctx, const std::string& dataset,
                     const std::string& checkpoint, const std::string& out_dir,
                     const std::vector<int>& frames, int n_azimuth,
                     double span_deg, int rays_per_bin);
int run_occupancy_slice(const ToolContext& ctx, const std::string& checkpoint,
                        const std::string& out_dir, double height,
                        const std::string& which_field, int resolution,
                        const std::string& dataset, int depth_frame);
int run_calibrate_scale(const ToolContext& ctx, const std::string& dataset,
                        const std::string& checkpoint,
                        const std::string& out_json, const std::string& out_png);
int run_fit_noise(const ToolContext& ctx, const std::string& dataset,
                  const std::string& out_json, double scale_hint);

}  // namespace rdftool
