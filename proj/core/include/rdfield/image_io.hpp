// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "rdfield/renderer.hpp"

namespace rdf {

/// 8-bit RGB PNG. `rgb` is row-major, 3 doubles per pixel, clamped to [0, 1]
/// and quantized by rounding.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<double>& rgb);

/// Reads an RGB PNG back to doubles in [0, 1] (any 8/16-bit gray/palette/RGB
/// input is converted to 8-bit RGB first).
std::vector<double> read_png_rgb8(const std::filesystem::path& path,
                                  int* width, int* height);

/// 16-bit grayscale PNG: values map [lo, hi] -> [0, 65535] (clamped). The
/// mapping is recorded in a JSON sidecar at `path + ".json"` so viewers and
/// tests can undo it.
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<double>& values, double lo, double hi);

/// Convenience wrappers for the renderer's image type (color only; depth has
/// its own exporter below).
void save_image_png(const std::filesystem::path& path, const RenderedImage& im);
RenderedImage load_image_png(const std::filesystem::path& path);

/// Depth channel as a binary 16-bit PGM (big-endian sample order per the
/// format) plus a JSON sidecar with the [lo, hi] mapping; negative depths
/// (no-hit marker) store as 0 and are listed as "invalid" in the sidecar.
void save_depth_pgm(const std::filesystem::path& path, const RenderedImage& im);

/// Matrix heatmap as an 8-bit grayscale PNG, mapping [lo, hi] -> [0, 255]
/// with row 0 at the top. Pass lo == hi to auto-scale to the matrix range.
void save_heatmap_png(const std::filesystem::path& path,
                      const Eigen::MatrixXd& values, double lo = 0.0,
                      double hi = 0.0);

}  // namespace rdf
