// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "rdfield/manifest.hpp"
#include "rdfield/synth.hpp"

namespace rdf {

/// Writes a dataset directory:
///   frames/frame_00000.rdaf ...   radar cubes
///   images/image_00000.png  ...   camera keyframes
///   trajectory.jsonl              published (scaleless) trajectory
///   manifest.json                 index + intrinsics + split rule
///   answers.json                  withheld generator truth (hidden scale,
///                                 noise parameters) — NOT referenced by the
///                                 manifest, so consumers cannot peek by
///                                 accident.
/// Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const Dataset& dataset,
                                    const RadarConfig& radar,
                                    const CameraIntrinsics& camera,
                                    const SplitRule& split = {});

struct LoadedDataset {
  Dataset data;       // hidden_scale stays 1 (the truth lives in answers.json)
  Manifest manifest;
};

/// Reads a dataset given its manifest path (or the directory containing
/// `manifest.json`). Validates the manifest and that every frame file agrees
/// with the manifest's radar dimensions.
LoadedDataset read_dataset(const std::filesystem::path& manifest_or_dir);

/// Generator truth sealed next to a manifest.
struct DatasetAnswers {
  double hidden_scale = 1.0;
  double noise_scale = 0.0;
  double noise_dof = 0.0;
};

DatasetAnswers read_answers(const std::filesystem::path& path);

}  // namespace rdf
