// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "rdfield/geometry.hpp"

namespace rdf {

/// Trajectory file: JSON lines. The first line is a header object with the
/// format tag, version, frame count, and stored scale; each following line
/// is one frame {"t", "p" [x,y,z], "q" [w,x,y,z], "v" [x,y,z]}. Doubles are
/// serialized with round-trip precision, so write-then-read is exact. Only
/// the base states and scale are stored; learned per-frame offsets travel
/// with checkpoints, not trajectory files.
void write_trajectory(const std::filesystem::path& path,
                      const Trajectory& trajectory);

Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace rdf
