// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0
//
// rdfield command-line front end.
//
// Exit codes are a stable contract: 0 on success, 2 on input/usage errors
// (bad flags, unreadable or inconsistent files), 3 on numerical failures
// (diverged optimization, flat calibration objective).

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <rdfield/calibration.hpp>

#include "tool_common.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "rdfield: differentiable range-Doppler rendering, fitting, and "
      "evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rdfield 0.1.0");

  std::vector<std::string> config_files, sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--config", config_files,
                 "Config file (key=value lines); repeatable, later files win")
      ->check(CLI::ExistingFile);
  app.add_option("--set", sets,
                 "Inline config override key=value; repeatable, beats files "
                 "and RDF_* environment variables");
  app.add_option("--seed", seed, "Master RNG seed (default 0)");
  app.add_option("--workers", workers, "Worker threads (0 = all cores)");

  const auto context = [&] {
    return rdftool::make_context(config_files, sets, seed, workers);
  };
  std::function<int()> runner;

  auto* sim = app.add_subcommand(
      "simulate", "Generate a synthetic dataset (frames, images, manifest)");
  sim->fallthrough();
  auto sim_out = std::make_shared<std::string>();
  sim->add_option("--out", *sim_out, "Output dataset directory")->required();
  sim->callback([&, sim_out] {
    runner = [&, sim_out] { return rdftool::run_simulate(context(), *sim_out); };
  });

  auto* fit = app.add_subcommand(
      "fit", "Fit a scene field to a dataset and write a checkpoint");
  fit->fallthrough();
  struct FitArgs {
    std::string dataset, out, log, antennas, resume;
  };
  auto fa = std::make_shared<FitArgs>();
  fit->add_option("--dataset", fa->dataset, "Dataset manifest or directory")
      ->required();
  fit->add_option("--out", fa->out, "Output checkpoint path")->required();
  fit->add_option("--log", fa->log, "JSON-lines training log path");
  fit->add_option("--antennas", fa->antennas,
                  "Antennas to train on, e.g. 0-3 or 0,2,5 (default all)");
  fit->add_option("--resume", fa->resume,
                  "Checkpoint to restore before the radar stage");
  fit->callback([&, fa] {
    runner = [&, fa] {
      return rdftool::run_fit(context(), fa->dataset, fa->out, fa->log,
                              fa->antennas, fa->resume);
    };
  });

  auto* ev = app.add_subcommand(
      "eval", "Score a checkpoint against a dataset split");
  ev->fallthrough();
  struct EvalArgs {
    std::string dataset, checkpoint, out, antennas, split = "test";
  };
  auto ea = std::make_shared<EvalArgs>();
  ev->add_option("--dataset", ea->dataset, "Dataset manifest or directory")
      ->required();
  ev->add_option("--checkpoint", ea->checkpoint, "Fitted checkpoint")
      ->required();
  ev->add_option("--out", ea->out, "Report/comparison output directory")
      ->required();
  ev->add_option("--antennas", ea->antennas,
                 "Antenna subset for the headline score (default all)");
  ev->add_option("--split", ea->split, "train or test (default test)");
  ev->callback([&, ea] {
    runner = [&, ea] {
      return rdftool::run_eval(context(), ea->dataset, ea->checkpoint, ea->out,
                               ea->antennas, ea->split);
    };
  });

  auto* sr = app.add_subcommand(
      "superresolve",
      "Render range-azimuth maps beyond the measured angular resolution");
  sr->fallthrough();
  struct SrArgs {
    std::string dataset, checkpoint, out;
    std::vector<int> frames;
    int n_azimuth = 128, rays_per_bin = 8;
    double span_deg = 90.0;
  };
  auto sa = std::make_shared<SrArgs>();
  sr->add_option("--dataset", sa->dataset, "Dataset manifest or directory")
      ->required();
  sr->add_option("--checkpoint", sa->checkpoint, "Fitted checkpoint")
      ->required();
  sr->add_option("--out", sa->out, "Output directory")->required();
  sr->add_option("--frames", sa->frames, "Frame indices (default 0)");
  sr->add_option("--azimuth-bins", sa->n_azimuth, "Azimuth bins (default 128)");
  sr->add_option("--span-deg", sa->span_deg,
                 "Azimuth span centered on boresight, degrees (default 90)");
  sr->add_option("--rays-per-bin", sa->rays_per_bin,
                 "Rays averaged per bin (default 8)");
  sr->callback([&, sa] {
    runner = [&, sa] {
      if (sa->frames.empty()) sa->frames.push_back(0);
      return rdftool::run_superresolve(context(), sa->dataset, sa->checkpoint,
                                       sa->out, sa->frames, sa->n_azimuth,
                                       sa->span_deg, sa->rays_per_bin);
    };
  });

  auto* oc = app.add_subcommand(
      "occupancy-slice",
      "Rasterize a horizontal occupancy slice (optionally with depth views)");
  oc->fallthrough();
  struct OcArgs {
    std::string checkpoint, out, field = "radar", dataset;
    double height = 0.0;
    int resolution = 192, depth_frame = -1;
  };
  auto oa = std::make_shared<OcArgs>();
  oc->add_option("--checkpoint", oa->checkpoint, "Fitted checkpoint")
      ->required();
  oc->add_option("--out", oa->out, "Output directory")->required();
  oc->add_option("--height", oa->height, "Slice height z, metric (default 0)");
  oc->add_option("--field", oa->field, "radar or camera (default radar)");
  oc->add_option("--resolution", oa->resolution,
                 "Slice raster resolution (default 192)");
  oc->add_option("--dataset", oa->dataset,
                 "Dataset for pose lookup (enables depth renders)");
  oc->add_option("--depth-frame", oa->depth_frame,
                 "Frame whose camera/radar depth views to render");
  oc->callback([&, oa] {
    runner = [&, oa] {
      return rdftool::run_occupancy_slice(context(), oa->checkpoint, oa->out,
                                          oa->height, oa->field,
                                          oa->resolution, oa->dataset,
                                          oa->depth_frame);
    };
  });

  auto* cs = app.add_subcommand(
      "calibrate-scale",
      "Recover the trajectory's metric scale against a reconstruction");
  cs->fallthrough();
  struct CsArgs {
    std::string dataset, checkpoint, out_json, out_png;
  };
  auto ca = std::make_shared<CsArgs>();
  cs->add_option("--dataset", ca->dataset, "Dataset manifest or directory")
      ->required();
  cs->add_option("--checkpoint", ca->checkpoint, "Checkpoint with a camera "
                 "geometry")
      ->required();
  cs->add_option("--out-json", ca->out_json, "Search report JSON path");
  cs->add_option("--out-png", ca->out_png, "Objective-curve plot path");
  cs->callback([&, ca] {
    runner = [&, ca] {
      return rdftool::run_calibrate_scale(context(), ca->dataset,
                                          ca->checkpoint, ca->out_json,
                                          ca->out_png);
    };
  });

  auto* fn = app.add_subcommand(
      "fit-noise", "Fit the noise floor from signal-free Doppler columns");
  fn->fallthrough();
  struct FnArgs {
    std::string dataset, out;
    double scale = 1.0;
  };
  auto na = std::make_shared<FnArgs>();
  fn->add_option("--dataset", na->dataset, "Dataset manifest or directory")
      ->required();
  fn->add_option("--out", na->out, "Report JSON path");
  fn->add_option("--scale", na->scale,
                 "Metric scale of the trajectory speeds (default 1)");
  fn->callback([&, na] {
    runner = [&, na] {
      return rdftool::run_fit_noise(context(), na->dataset, na->out, na->scale);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return rdftool::kInputError;
  }

  try {
    return runner ? runner() : rdftool::kInputError;
  } catch (const rdf::FailedCalibration& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return rdftool::kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rdftool::kInputError;
  }
}
