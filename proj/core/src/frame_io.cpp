// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/frame_io.hpp"

#include <algorithm>
#include <fstream>

#include "io_internal.hpp"

namespace rdf {
namespace {

constexpr char kMagic[4] = {'R', 'D', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void write_frame(const std::filesystem::path& path,
                 const RangeDopplerFrame& frame, const RadarConfig& config) {
  if (frame.cube.size() !=
      static_cast<std::size_t>(frame.n_range) * frame.n_doppler *
          frame.n_antenna) {
    throw std::invalid_argument("write_frame: cube size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create " + path.string());

  internal::write_header(out, kMagic, kVersion);
  internal::write_u32(out, static_cast<std::uint32_t>(frame.n_range));
  internal::write_u32(out, static_cast<std::uint32_t>(frame.n_doppler));
  internal::write_u32(out, static_cast<std::uint32_t>(frame.n_antenna));
  internal::write_f64(out, config.range_resolution);
  internal::write_f64(out, config.doppler_resolution);
  internal::write_f64(out, frame.timestamp);

  const bool all_valid =
      std::all_of(frame.mask.begin(), frame.mask.end(),
                  [](std::uint8_t m) { return m != 0; });
  internal::write_u32(out, all_valid ? 0u : 1u);

  for (double v : frame.cube) internal::write_f32(out, static_cast<float>(v));
  if (!all_valid) {
    internal::write_bytes(out, frame.mask.data(), frame.mask.size());
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RangeDopplerFrame read_frame(const std::filesystem::path& path,
                             RadarConfig* config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  internal::read_header(in, kMagic, kVersion, path.string());
  const int n_range = static_cast<int>(internal::read_u32(in, "n_range"));
  const int n_doppler = static_cast<int>(internal::read_u32(in, "n_doppler"));
  const int n_antenna = static_cast<int>(internal::read_u32(in, "n_antenna"));
  if (n_range <= 0 || n_doppler <= 0 || n_antenna <= 0) {
    throw std::runtime_error(path.string() + ": non-positive cube dimension");
  }
  const double range_resolution = internal::read_f64(in, "range_resolution");
  const double doppler_resolution =
      internal::read_f64(in, "doppler_resolution");
  const double timestamp = internal::read_f64(in, "timestamp");
  const std::uint32_t has_mask = internal::read_u32(in, "mask flag");

  RangeDopplerFrame frame(n_range, n_doppler, n_antenna, timestamp);
  for (double& v : frame.cube) {
    v = static_cast<double>(internal::read_f32(in, "cube"));
  }
  if (has_mask != 0) {
    internal::read_bytes(in, frame.mask.data(), frame.mask.size(), "mask");
  }
  if (config != nullptr) {
    config->n_range = n_range;
    config->n_doppler = n_doppler;
    config->n_antenna = n_antenna;
    config->range_resolution = range_resolution;
    config->doppler_resolution = doppler_resolution;
  }
  return frame;
}

}  // namespace rdf
