// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rdfield/field.hpp"
#include "rdfield/params.hpp"

namespace rdf {

/// Model checkpoint file ("RDFC"): little-endian magic + version, a JSON
/// header carrying the FieldConfig (enough to reconstruct the SceneField,
/// including post-calibration bounds) plus caller metadata, then every
/// registered parameter block by name as f64 spans. Blocks are written in
/// registration order; loading matches strictly by name and size, so a
/// checkpoint only loads into a model built from the same configuration.
void save_checkpoint(const std::filesystem::path& path,
                     const ParamRegistry& registry, const FieldConfig& field,
                     const std::string& extra_json = "{}");

struct CheckpointInfo {
  FieldConfig field;
  std::string extra_json;  // caller metadata, verbatim
  std::vector<std::pair<std::string, std::size_t>> blocks;  // name, size
};

/// Reads the header and block directory without touching any model.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

enum class BlockMatch {
  kExact,   // file and registry must carry exactly the same block set
  kSubset,  // every registered block must exist in the file; extras skipped
};

/// Restores stored blocks into the registry's storage. kExact is the
/// fit/eval contract; kSubset lets render-only tools rebuild just the scene
/// field (skipping e.g. proposal-sampler blocks). Throws std::runtime_error
/// on any mismatch for the chosen mode.
void load_checkpoint_params(const std::filesystem::path& path,
                            const ParamRegistry& registry,
                            BlockMatch match = BlockMatch::kExact);

/// FieldConfig <-> JSON text (used by the checkpoint header; exposed for
/// tools that want to print or template configurations).
std::string field_config_to_json(const FieldConfig& config);
FieldConfig field_config_from_json(const std::string& json_text);

}  // namespace rdf
