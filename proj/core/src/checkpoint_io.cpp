// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/checkpoint_io.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "io_internal.hpp"

namespace rdf {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'R', 'D', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;

json box_to_json(const Eigen::AlignedBox3d& b) {
  return json::array({{b.min().x(), b.min().y(), b.min().z()},
                      {b.max().x(), b.max().y(), b.max().z()}});
}

Eigen::AlignedBox3d box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || j[0].size() != 3 || j[1].size() != 3) {
    throw std::runtime_error("checkpoint: malformed bounds");
  }
  return Eigen::AlignedBox3d(
      Eigen::Vector3d(j[0][0].get<double>(), j[0][1].get<double>(),
                      j[0][2].get<double>()),
      Eigen::Vector3d(j[1][0].get<double>(), j[1][1].get<double>(),
                      j[1][2].get<double>()));
}

json field_to_json_obj(const FieldConfig& c) {
  return json{
      {"bounds", box_to_json(c.bounds)},
      {"resolutions", c.resolutions},
      {"feature_dim", c.feature_dim},
      {"code_dim", c.code_dim},
      {"sh_degree", c.sh_degree},
      {"use_sh", c.use_sh},
      {"brdf_count", c.brdf_count},
      {"brdf_rho_min", c.brdf_rho_min},
      {"brdf_rho_max", c.brdf_rho_max},
      {"n_antenna", c.n_antenna},
      {"gain_azimuth", c.gain_azimuth},
      {"gain_elevation", c.gain_elevation},
      {"radar_hidden_width", c.radar_hidden_width},
      {"reflectance_activation",
       c.reflectance_activation == RadarAppearance::Activation::kExp
           ? "exp"
           : "softplus"},
      {"density_bias_init", c.density_bias_init},
      {"normal_resolutions", c.normal_resolutions},
  };
}

FieldConfig field_from_json_obj(const json& j) {
  FieldConfig c;
  c.bounds = box_from_json(j.at("bounds"));
  c.resolutions = j.at("resolutions").get<std::vector<int>>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.code_dim = j.at("code_dim").get<int>();
  c.sh_degree = j.at("sh_degree").get<int>();
  c.use_sh = j.at("use_sh").get<bool>();
  c.brdf_count = j.at("brdf_count").get<int>();
  c.brdf_rho_min = j.at("brdf_rho_min").get<double>();
  c.brdf_rho_max = j.at("brdf_rho_max").get<double>();
  c.n_antenna = j.at("n_antenna").get<int>();
  c.gain_azimuth = j.at("gain_azimuth").get<int>();
  c.gain_elevation = j.at("gain_elevation").get<int>();
  c.radar_hidden_width = j.at("radar_hidden_width").get<int>();
  const std::string act = j.at("reflectance_activation").get<std::string>();
  if (act == "exp") {
    c.reflectance_activation = RadarAppearance::Activation::kExp;
  } else if (act == "softplus") {
    c.reflectance_activation = RadarAppearance::Activation::kSoftplus;
  } else {
    throw std::runtime_error("checkpoint: unknown reflectance activation '" +
                             act + "'");
  }
  c.density_bias_init = j.at("density_bias_init").get<double>();
  c.normal_resolutions = j.at("normal_resolutions").get<std::vector<int>>();
  return c;
}

}  // namespace

std::string field_config_to_json(const FieldConfig& config) {
  return field_to_json_obj(config).dump();
}

FieldConfig field_config_from_json(const std::string& json_text) {
  return field_from_json_obj(json::parse(json_text));
}

void save_checkpoint(const std::filesystem::path& path,
                     const ParamRegistry& registry, const FieldConfig& field,
                     const std::string& extra_json) {
  json header;
  header["format"] = "rdfield-checkpoint";
  header["field"] = field_to_json_obj(field);
  header["extra"] = json::parse(extra_json);  // validates caller metadata
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create " + path.string());
  internal::write_header(out, kMagic, kVersion);
  internal::write_u64(out, header_text.size());
  internal::write_bytes(out, header_text.data(), header_text.size());

  internal::write_u32(out, static_cast<std::uint32_t>(registry.n_blocks()));
  for (const ParamRegistry::Block& b : registry.blocks()) {
    internal::write_u32(out, static_cast<std::uint32_t>(b.name.size()));
    internal::write_bytes(out, b.name.data(), b.name.size());
    internal::write_u64(out, b.size);
    for (std::size_t i = 0; i < b.size; ++i) {
      internal::write_f64(out, b.data[i]);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

/// Shared reader: positions the stream past the header and returns it parsed.
json read_header_json(std::istream& in, const std::string& path) {
  internal::read_header(in, kMagic, kVersion, path);
  const std::uint64_t len = internal::read_u64(in, "header length");
  std::string text(len, '\0');
  internal::read_bytes(in, text.data(), len, "header");
  json header = json::parse(text);
  if (header.value("format", "") != "rdfield-checkpoint") {
    throw std::runtime_error(path + ": not a checkpoint header");
  }
  return header;
}

}  // namespace

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json header = read_header_json(in, path.string());

  CheckpointInfo info;
  info.field = field_from_json_obj(header.at("field"));
  info.extra_json = header.at("extra").dump();

  const std::uint32_t n_blocks = internal::read_u32(in, "block count");
  info.blocks.reserve(n_blocks);
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const std::uint32_t name_len = internal::read_u32(in, "block name length");
    std::string name(name_len, '\0');
    internal::read_bytes(in, name.data(), name_len, "block name");
    const std::uint64_t size = internal::read_u64(in, "block size");
    info.blocks.emplace_back(std::move(name),
                             static_cast<std::size_t>(size));
    in.seekg(static_cast<std::streamoff>(size * 8), std::ios::cur);
    if (!in) throw std::runtime_error(path.string() + ": truncated block");
  }
  return info;
}

void load_checkpoint_params(const std::filesystem::path& path,
                            const ParamRegistry& registry, BlockMatch match) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  read_header_json(in, path.string());

  const std::uint32_t n_blocks = internal::read_u32(in, "block count");
  if (match == BlockMatch::kExact && n_blocks != registry.n_blocks()) {
    throw std::runtime_error(
        path.string() + ": block count mismatch (file " +
        std::to_string(n_blocks) + ", model " +
        std::to_string(registry.n_blocks()) + ")");
  }

  // Registered blocks by name; names are unique by the registry contract.
  std::map<std::string, const ParamRegistry::Block*> wanted;
  for (const ParamRegistry::Block& b : registry.blocks()) {
    if (!wanted.emplace(b.name, &b).second) {
      throw std::runtime_error("load_checkpoint_params: duplicate block name '" +
                               b.name + "' in registry");
    }
  }

  std::size_t restored = 0;
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    const std::uint32_t name_len = internal::read_u32(in, "block name length");
    std::string name(name_len, '\0');
    internal::read_bytes(in, name.data(), name_len, "block name");
    const std::uint64_t size = internal::read_u64(in, "block size");
    auto it = wanted.find(name);
    if (it == wanted.end()) {
      if (match == BlockMatch::kExact) {
        throw std::runtime_error(path.string() + ": file block '" + name +
                                 "' is not registered in the model");
      }
      in.seekg(static_cast<std::streamoff>(size * 8), std::ios::cur);
      if (!in) throw std::runtime_error(path.string() + ": truncated block");
      continue;
    }
    const ParamRegistry::Block& blk = *it->second;
    if (blk.size != size) {
      throw std::runtime_error(path.string() + ": block '" + name + "' has " +
                               std::to_string(size) + " values in the file but " +
                               std::to_string(blk.size) + " in the model");
    }
    for (std::size_t i = 0; i < blk.size; ++i) {
      blk.data[i] = internal::read_f64(in, "block data");
    }
    wanted.erase(it);
    ++restored;
  }
  if (!wanted.empty()) {
    throw std::runtime_error(path.string() + ": checkpoint is missing block '" +
                             wanted.begin()->first + "' (and possibly others)");
  }
  (void)restored;
}

}  // namespace rdf
