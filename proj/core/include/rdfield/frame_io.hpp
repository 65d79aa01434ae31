// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "rdfield/renderer.hpp"

namespace rdf {

/// Range-Doppler cube file ("RDAF"): little-endian, magic + version, cube
/// dimensions and bin resolutions, then the amplitude cube as 32-bit floats
/// in range-major order. The validity mask is stored only when some cell is
/// invalid (it is a derived quantity for measured data). Amplitudes are
/// quantized to f32 on disk; everything else round-trips exactly.
void write_frame(const std::filesystem::path& path,
                 const RangeDopplerFrame& frame, const RadarConfig& config);

/// Reads an RDAF file. `config`, when non-null, receives the stored bin
/// resolutions (cube dimensions are returned on the frame itself).
RangeDopplerFrame read_frame(const std::filesystem::path& path,
                             RadarConfig* config = nullptr);

}  // namespace rdf
