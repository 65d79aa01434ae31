// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "tool_common.hpp"

#include <sstream>
#include <stdexcept>

#include <rdfield/manifest.hpp>

namespace rdftool {

ToolContext make_context(const std::vector<std::string>& config_files,
                         const std::vector<std::string>& sets,
                         const std::optional<std::uint64_t>& seed_flag,
                         const std::optional<int>& workers_flag) {
  ToolContext ctx;
  for (const std::string& file : config_files) {
    ctx.config.merge_file_layer(rdf::Config::from_file(file));
  }
  for (const std::string& s : sets) ctx.config.set_from_assignment(s);
  if (seed_flag) ctx.config.set("seed", std::to_string(*seed_flag));
  if (workers_flag) ctx.config.set("workers", std::to_string(*workers_flag));
  ctx.seed = ctx.config.get_u64("seed", 0);
  ctx.workers = ctx.config.get_int("workers", 0);
  return ctx;
}

std::vector<int> expand_antennas(const std::string& spec) {
  std::vector<int> out;
  if (spec.empty()) return out;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const std::size_t dash = item.find('-', 1);  // allow no negatives anyway
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw std::runtime_error("empty range");
        for (int k = lo; k <= hi; ++k) out.push_back(k);
      }
    } catch (const std::exception&) {
      throw std::runtime_error("bad antenna spec '" + spec +
                               "' (use e.g. 0-3 or 0,2,5)");
    }
  }
  return out;
}

std::unique_ptr<FitSetup> make_fit_setup(const ToolContext& ctx,
                                         const std::string& dataset_path,
                                         const rdf::FieldConfig* field_override,
                                         const std::string& antennas_spec,
                                         std::ostream* log) {
  auto setup = std::make_unique<FitSetup>();
  setup->loaded = rdf::read_dataset(dataset_path);
  const rdf::Manifest& manifest = setup->loaded.manifest;
  setup->trajectory = setup->loaded.data.trajectory;

  // Measurement geometry is the dataset's; only sampling density may be
  // tuned from the config.
  rdf::RadarConfig radar = manifest.radar;
  radar.samples_per_ray =
      ctx.config.get_int("radar.samples_per_ray", radar.samples_per_ray);
  radar.circle_samples =
      ctx.config.get_int("radar.circle_samples", radar.circle_samples);
  radar.validate();

  setup->train_config =
      rdf::train_config_from(ctx.config, radar, manifest.camera);
  setup->train_config.seed = ctx.seed;
  setup->train_config.n_workers = ctx.workers;
  setup->train_config.log = log;
  if (!antennas_spec.empty()) {
    setup->train_config.train_antennas = expand_antennas(antennas_spec);
  }
  rdf::resolve_split(manifest.split, setup->trajectory,
                     &setup->train_config.train_ids,
                     &setup->train_config.test_ids);

  rdf::FieldConfig fc;
  if (field_override != nullptr) {
    fc = *field_override;
  } else {
    fc = rdf::field_config_from(ctx.config, setup->loaded.data.bounds);
    fc.n_antenna = radar.n_antenna;
  }
  if (fc.n_antenna != radar.n_antenna) {
    throw std::runtime_error("field has " + std::to_string(fc.n_antenna) +
                             " antennas but the dataset has " +
                             std::to_string(radar.n_antenna));
  }
  setup->field = std::make_unique<rdf::SceneField>(fc);
  rdf::Rng rng(rdf::Rng::mix(ctx.seed, 0x1417ULL));
  setup->field->randomize(&rng);

  setup->trainer = std::make_unique<rdf::Trainer>(
      setup->field.get(), &setup->trajectory, setup->loaded.data,
      setup->train_config);
  return setup;
}

std::string eval_report_json(const rdf::EvalReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "{\"mean_ssim\":" << report.mean_ssim
      << ",\"mean_psnr\":" << report.mean_psnr
      << ",\"n_slices\":" << report.n_slices
      << ",\"n_infinite_psnr\":" << report.n_infinite_psnr << ",";
  auto list = [&out](const char* name, const std::vector<double>& v) {
    out << '"' << name << "\":[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ',';
      out << v[i];
    }
    out << ']';
  };
  list("ssim_per_frame", report.ssim_per_frame);
  out << ',';
  list("psnr_per_frame", report.psnr_per_frame);
  out << '}';
  return out.str();
}

}  // namespace rdftool
