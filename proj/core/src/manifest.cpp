// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/manifest.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace rdf {
namespace {

using nlohmann::json;

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error(std::string("manifest: malformed ") + what);
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(),
                         j[2].get<double>());
}

}  // namespace

void resolve_split(const SplitRule& rule, const Trajectory& trajectory,
                   std::vector<std::size_t>* train_ids,
                   std::vector<std::size_t>* test_ids) {
  train_ids->clear();
  test_ids->clear();
  const std::size_t n = trajectory.size();
  if (rule.kind == SplitRule::Kind::kTemporalTail) {
    if (!(rule.test_fraction >= 0.0 && rule.test_fraction < 1.0)) {
      throw std::invalid_argument("resolve_split: test_fraction outside [0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(std::max<double>(
        1.0, std::floor((1.0 - rule.test_fraction) * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? *train_ids : *test_ids).push_back(i);
    }
  } else {
    if (rule.test_region.isEmpty()) {
      throw std::invalid_argument("resolve_split: empty spatial test region");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool in_region =
          rule.test_region.contains(trajectory[i].pose.position);
      (in_region ? *test_ids : *train_ids).push_back(i);
    }
  }
}

void write_manifest(const std::filesystem::path& path,
                    const Manifest& manifest) {
  json j;
  j["format"] = "rdfield-dataset";
  j["version"] = 1;
  j["frames"] = manifest.frame_files;
  j["images"] = manifest.image_files;
  j["image_frame_index"] = manifest.image_frame_index;
  j["trajectory"] = manifest.trajectory_file;
  j["radar"] = {{"n_range", manifest.radar.n_range},
                {"n_doppler", manifest.radar.n_doppler},
                {"n_antenna", manifest.radar.n_antenna},
                {"range_resolution", manifest.radar.range_resolution},
                {"doppler_resolution", manifest.radar.doppler_resolution},
                {"samples_per_ray", manifest.radar.samples_per_ray},
                {"circle_samples", manifest.radar.circle_samples}};
  j["camera"] = {{"width", manifest.camera.width},
                 {"height", manifest.camera.height},
                 {"fx", manifest.camera.fx},
                 {"fy", manifest.camera.fy},
                 {"cx", manifest.camera.cx},
                 {"cy", manifest.camera.cy}};
  if (manifest.split.kind == SplitRule::Kind::kTemporalTail) {
    j["split"] = {{"kind", "temporal_tail"},
                  {"test_fraction", manifest.split.test_fraction}};
  } else {
    j["split"] = {{"kind", "spatial_box"},
                  {"test_region_min", vec3(manifest.split.test_region.min())},
                  {"test_region_max", vec3(manifest.split.test_region.max())}};
  }
  if (!manifest.bounds.isEmpty()) {
    j["bounds_min"] = vec3(manifest.bounds.min());
    j["bounds_max"] = vec3(manifest.bounds.max());
  }
  j["noise_scale"] = manifest.noise_scale;
  j["noise_dof"] = manifest.noise_dof;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "rdfield-dataset" || j.value("version", 0) != 1) {
    throw std::runtime_error(path.string() + ": not a dataset manifest");
  }

  Manifest m;
  m.root = path.has_parent_path() ? path.parent_path()
                                  : std::filesystem::path(".");
  m.frame_files = j.at("frames").get<std::vector<std::string>>();
  m.image_files = j.at("images").get<std::vector<std::string>>();
  m.image_frame_index = j.at("image_frame_index").get<std::vector<int>>();
  m.trajectory_file = j.at("trajectory").get<std::string>();

  const json& r = j.at("radar");
  m.radar.n_range = r.at("n_range").get<int>();
  m.radar.n_doppler = r.at("n_doppler").get<int>();
  m.radar.n_antenna = r.at("n_antenna").get<int>();
  m.radar.range_resolution = r.at("range_resolution").get<double>();
  m.radar.doppler_resolution = r.at("doppler_resolution").get<double>();
  m.radar.samples_per_ray = r.at("samples_per_ray").get<int>();
  m.radar.circle_samples = r.at("circle_samples").get<int>();
  m.radar.validate();

  const json& c = j.at("camera");
  m.camera.width = c.at("width").get<int>();
  m.camera.height = c.at("height").get<int>();
  m.camera.fx = c.at("fx").get<double>();
  m.camera.fy = c.at("fy").get<double>();
  m.camera.cx = c.at("cx").get<double>();
  m.camera.cy = c.at("cy").get<double>();

  const json& s = j.at("split");
  const std::string kind = s.at("kind").get<std::string>();
  if (kind == "temporal_tail") {
    m.split.kind = SplitRule::Kind::kTemporalTail;
    m.split.test_fraction = s.at("test_fraction").get<double>();
    if (!(m.split.test_fraction >= 0.0 && m.split.test_fraction < 1.0)) {
      throw std::runtime_error(path.string() + ": test_fraction outside [0, 1)");
    }
  } else if (kind == "spatial_box") {
    m.split.kind = SplitRule::Kind::kSpatialBox;
    m.split.test_region = Eigen::AlignedBox3d(
        vec3_from(s.at("test_region_min"), "test_region_min"),
        vec3_from(s.at("test_region_max"), "test_region_max"));
  } else {
    throw std::runtime_error(path.string() + ": unknown split kind '" + kind +
                             "'");
  }
  if (j.contains("bounds_min") && j.contains("bounds_max")) {
    m.bounds = Eigen::AlignedBox3d(vec3_from(j.at("bounds_min"), "bounds_min"),
                                   vec3_from(j.at("bounds_max"), "bounds_max"));
  }
  m.noise_scale = j.value("noise_scale", 0.0);
  m.noise_dof = j.value("noise_dof", 0.0);

  if (m.image_frame_index.size() != m.image_files.size()) {
    throw std::runtime_error(path.string() +
                             ": image_frame_index does not match images");
  }
  for (int idx : m.image_frame_index) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= m.frame_files.size()) {
      throw std::runtime_error(path.string() + ": image frame index " +
                               std::to_string(idx) + " out of range");
    }
  }
  std::vector<std::string> all = m.frame_files;
  all.insert(all.end(), m.image_files.begin(), m.image_files.end());
  all.push_back(m.trajectory_file);
  for (const std::string& rel : all) {
    if (!std::filesystem::exists(m.resolve(rel))) {
      throw std::runtime_error(path.string() + ": referenced file missing: " +
                               rel);
    }
  }
  return m;
}

}  // namespace rdf
