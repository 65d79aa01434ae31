// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "rdfield/geometry.hpp"
#include "rdfield/renderer.hpp"

namespace rdf {

/// How a dataset's frames divide into train and test. Either rule yields a
/// partition of [0, n_frames) by construction: the temporal rule holds out
/// the trailing fraction, the spatial rule holds out the frames whose base
/// sensor position falls inside a box.
struct SplitRule {
  enum class Kind { kTemporalTail, kSpatialBox };

  Kind kind = Kind::kTemporalTail;
  double test_fraction = 0.2;       // kTemporalTail
  Eigen::AlignedBox3d test_region;  // kSpatialBox, trajectory coordinates
};

/// Computes the frame id lists for a split rule. Every frame lands in
/// exactly one list; the temporal rule always keeps at least one train
/// frame.
void resolve_split(const SplitRule& rule, const Trajectory& trajectory,
                   std::vector<std::size_t>* train_ids,
                   std::vector<std::size_t>* test_ids);

/// Dataset directory index. All file entries are paths relative to the
/// manifest's directory (`root`, set when reading). Radar and camera
/// intrinsics live here so a dataset is self-describing.
struct Manifest {
  std::filesystem::path root;  // directory of the manifest file (not stored)
  std::vector<std::string> frame_files;
  std::vector<std::string> image_files;
  std::vector<int> image_frame_index;  // frame each image belongs to
  std::string trajectory_file = "trajectory.jsonl";
  RadarConfig radar;
  CameraIntrinsics camera;
  SplitRule split;
  /// Suggested working volume in the trajectory's (scaleless) coordinates;
  /// fitting uses it as the default field bounds. Empty when unknown.
  Eigen::AlignedBox3d bounds;
  // Generator provenance (0 = unknown/none). The hidden metric scale is
  // deliberately NOT here; simulation seals it in a separate answers file.
  double noise_scale = 0.0;
  double noise_dof = 0.0;

  std::filesystem::path resolve(const std::string& relative) const {
    return root / relative;
  }
};

/// Writes `manifest.json`-style output. `root` is ignored (paths are stored
/// relative).
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Reads and validates a manifest: parses JSON, sets `root` from the file's
/// directory, and checks that every referenced file exists, that the image
/// index aligns with the image list, and that split parameters are sane.
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace rdf
