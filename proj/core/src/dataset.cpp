// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/dataset_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rdfield/frame_io.hpp"
#include "rdfield/image_io.hpp"
#include "rdfield/trajectory_io.hpp"

namespace rdf {
namespace {

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05zu%s", stem, i, ext);
  return buf;
}

}  // namespace

std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const Dataset& dataset,
                                    const RadarConfig& radar,
                                    const CameraIntrinsics& camera,
                                    const SplitRule& split) {
  if (dataset.frames.empty()) {
    throw std::invalid_argument("write_dataset: no radar frames");
  }
  if (dataset.images.size() != dataset.image_frame_index.size()) {
    throw std::invalid_argument("write_dataset: image index mismatch");
  }
  std::filesystem::create_directories(dir / "frames");
  std::filesystem::create_directories(dir / "images");

  Manifest manifest;
  manifest.radar = radar;
  manifest.camera = camera;
  manifest.split = split;
  manifest.bounds = dataset.bounds;
  manifest.noise_scale = dataset.noise_scale;
  manifest.noise_dof = dataset.noise_dof;

  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    const std::string rel = "frames/" + numbered("frame", i, ".rdaf");
    write_frame(dir / rel, dataset.frames[i], radar);
    manifest.frame_files.push_back(rel);
  }
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const std::string rel = "images/" + numbered("image", i, ".png");
    save_image_png(dir / rel, dataset.images[i]);
    manifest.image_files.push_back(rel);
    manifest.image_frame_index.push_back(dataset.image_frame_index[i]);
  }
  write_trajectory(dir / manifest.trajectory_file, dataset.trajectory);

  const std::filesystem::path manifest_path = dir / "manifest.json";
  write_manifest(manifest_path, manifest);

  nlohmann::json answers{{"hidden_scale", dataset.hidden_scale},
                         {"noise_scale", dataset.noise_scale},
                         {"noise_dof", dataset.noise_dof}};
  std::ofstream out(dir / "answers.json");
  if (!out) throw std::runtime_error("cannot create answers.json");
  out << answers.dump(2) << '\n';
  return manifest_path;
}

LoadedDataset read_dataset(const std::filesystem::path& manifest_or_dir) {
  std::filesystem::path manifest_path = manifest_or_dir;
  if (std::filesystem::is_directory(manifest_path)) {
    manifest_path /= "manifest.json";
  }
  LoadedDataset loaded;
  loaded.manifest = read_manifest(manifest_path);
  const Manifest& m = loaded.manifest;

  loaded.data.frames.reserve(m.frame_files.size());
  for (const std::string& rel : m.frame_files) {
    RadarConfig stored;
    loaded.data.frames.push_back(read_frame(m.resolve(rel), &stored));
    const RangeDopplerFrame& f = loaded.data.frames.back();
    if (f.n_range != m.radar.n_range || f.n_doppler != m.radar.n_doppler ||
        f.n_antenna != m.radar.n_antenna ||
        stored.range_resolution != m.radar.range_resolution ||
        stored.doppler_resolution != m.radar.doppler_resolution) {
      throw std::runtime_error(rel + ": frame disagrees with manifest radar"
                                     " configuration");
    }
  }
  loaded.data.images.reserve(m.image_files.size());
  for (const std::string& rel : m.image_files) {
    loaded.data.images.push_back(load_image_png(m.resolve(rel)));
  }
  loaded.data.image_frame_index = m.image_frame_index;
  loaded.data.trajectory = read_trajectory(m.resolve(m.trajectory_file));
  if (loaded.data.trajectory.size() < loaded.data.frames.size()) {
    throw std::runtime_error(manifest_path.string() +
                             ": trajectory shorter than frame list");
  }
  loaded.data.bounds = m.bounds;
  loaded.data.noise_scale = m.noise_scale;
  loaded.data.noise_dof = m.noise_dof;
  return loaded;
}

DatasetAnswers read_answers(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  if (std::filesystem::is_directory(p)) p /= "answers.json";
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  nlohmann::json j;
  in >> j;
  DatasetAnswers a;
  a.hidden_scale = j.at("hidden_scale").get<double>();
  a.noise_scale = j.value("noise_scale", 0.0);
  a.noise_dof = j.value("noise_dof", 0.0);
  return a;
}

}  // namespace rdf
