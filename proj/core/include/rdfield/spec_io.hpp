// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rdfield/config.hpp"
#include "rdfield/field.hpp"
#include "rdfield/manifest.hpp"
#include "rdfield/synth.hpp"
#include "rdfield/train.hpp"

namespace rdf {

/// Mapping from flat key=value configuration to the typed configs. Every key
/// is optional and falls back to the `base` (or default-constructed) value,
/// so configuration files only state what they change. Malformed values and
/// out-of-range results throw std::runtime_error with the offending key.
///
/// Key families (see README for the full table):
///   radar.*       n_range, n_doppler, n_antenna, range_resolution,
///                 doppler_resolution, samples_per_ray, circle_samples
///   camera.*      width, height, fx, fy, cx, cy (fx/fy default to width,
///                 cx/cy to the image center when only a size is given)
///   scene.*       preset, seed, azimuth_separation_deg
///   trajectory.*  kind (orbit|lawnmower|random-walk), n_frames, dt, radius,
///                 height, speed, seed
///   sim.*         gt_samples_per_ray, camera_every, hidden_scale,
///                 noise_scale, noise_dof, seed
///   split.*       kind (temporal_tail|spatial_box), test_fraction,
///                 test_region_min/max ("x,y,z" triples... parsed as lists)
///   field.*       resolutions, feature_dim, code_dim, sh_degree, use_sh,
///                 brdf_count, brdf_rho_min/max, gain_azimuth/elevation,
///                 radar_hidden_width, reflectance_activation (softplus|exp),
///                 density_bias_init, normal_resolutions, bounds_min/max
///   train.*       batch sizes, stage schedules, pose flags, antennas, ...
///   weights.*     loss weights; pose_reg.* pose regularizer weights
///   scale.*       s_min, s_max, grid_points, rel_tol, max_frames, run

RadarConfig radar_from_config(const Config& cfg, const RadarConfig& base = {});

CameraIntrinsics camera_from_config(const Config& cfg,
                                    const CameraIntrinsics& base = {});

/// Full synthesis description (scene preset + trajectory + sensors + noise).
DatasetConfig dataset_config_from(const Config& cfg);

SplitRule split_from_config(const Config& cfg, const SplitRule& base = {});

/// `default_bounds` seeds the working volume (usually the manifest's);
/// field.bounds_min/max override it. Throws if the result is empty.
FieldConfig field_config_from(const Config& cfg,
                              const Eigen::AlignedBox3d& default_bounds);

TrainConfig train_config_from(const Config& cfg, const RadarConfig& radar,
                              const CameraIntrinsics& camera);

ScaleSearchConfig scale_search_from(const Config& cfg, const RadarConfig& radar);

}  // namespace rdf
