// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <rdfield/dataset_io.hpp>
#include <rdfield/spec_io.hpp>
#include <rdfield/synth.hpp>

#include "tool_common.hpp"

namespace rdftool {

int run_simulate(const ToolContext& ctx, const std::string& out_dir) {
  rdf::DatasetConfig spec = rdf::dataset_config_from(ctx.config);
  if (ctx.config.has("seed")) spec.seed = ctx.seed;
  spec.n_workers = ctx.workers;

  std::cerr << "simulating " << spec.trajectory.n_frames << " frames ("
            << spec.radar.n_range << "x" << spec.radar.n_doppler << "x"
            << spec.radar.n_antenna << ")...\n";
  const rdf::Dataset dataset = rdf::generate_dataset(spec);
  const rdf::SplitRule split = rdf::split_from_config(ctx.config);
  const std::filesystem::path manifest_path =
      rdf::write_dataset(out_dir, dataset, spec.radar, spec.camera, split);

  std::cout << "{\"manifest\":\"" << manifest_path.string()
            << "\",\"frames\":" << dataset.frames.size()
            << ",\"images\":" << dataset.images.size() << "}\n";
  return kOk;
}

}  // namespace rdftool
