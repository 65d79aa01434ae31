// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/trajectory_io.hpp"

#include <fstream>

#include <json.hpp>

namespace rdf {
namespace {

using nlohmann::json;

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error(std::string("trajectory: malformed ") + what);
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(),
                         j[2].get<double>());
}

}  // namespace

void write_trajectory(const std::filesystem::path& path,
                      const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create " + path.string());

  json header{{"type", "rdfield-trajectory"},
              {"version", 1},
              {"n_frames", trajectory.size()},
              {"scale", trajectory.scale()}};
  out << header.dump() << '\n';

  for (const FrameState& f : trajectory.frames()) {
    const Eigen::Quaterniond& q = f.pose.rotation;
    json line{{"t", f.time},
              {"p", vec3(f.pose.position)},
              {"q", json::array({q.w(), q.x(), q.y(), q.z()})},
              {"v", vec3(f.velocity)}};
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path.string() + ": empty trajectory file");
  }
  const json header = json::parse(line);
  if (header.value("type", "") != "rdfield-trajectory" ||
      header.value("version", 0) != 1) {
    throw std::runtime_error(path.string() + ": not a trajectory file");
  }
  const std::size_t n = header.at("n_frames").get<std::size_t>();
  const double scale = header.at("scale").get<double>();

  std::vector<FrameState> frames;
  frames.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    FrameState f;
    f.time = j.at("t").get<double>();
    f.pose.position = vec3_from(j.at("p"), "position");
    const json& q = j.at("q");
    if (!q.is_array() || q.size() != 4) {
      throw std::runtime_error(path.string() + ": malformed rotation");
    }
    f.pose.rotation = Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                                         q[2].get<double>(), q[3].get<double>());
    f.velocity = vec3_from(j.at("v"), "velocity");
    frames.push_back(f);
  }
  if (frames.size() != n) {
    throw std::runtime_error(path.string() + ": header promises " +
                             std::to_string(n) + " frames, file has " +
                             std::to_string(frames.size()));
  }
  Trajectory trajectory(std::move(frames));
  trajectory.set_scale(scale);
  return trajectory;
}

}  // namespace rdf
