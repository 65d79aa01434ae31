// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rdfield/params.hpp"

namespace rdf {

/// Dense multi-resolution feature grid with trilinear interpolation. Each
/// level stores resolution^3 vertices of `feature_dim` doubles spanning the
/// same axis-aligned bounds; queries concatenate the per-level
/// interpolations. Queries outside the bounds yield the zero feature.
class MultiResGrid {
 public:
  MultiResGrid(const Eigen::AlignedBox3d& bounds, std::vector<int> resolutions,
               int feature_dim);

  /// Registers every level as one parameter block ("<prefix>/level<i>").
  void register_params(ParamRegistry* reg, const std::string& prefix);
  bool registered() const { return !block_ids_.empty(); }

  const Eigen::AlignedBox3d& bounds() const { return bounds_; }
  /// Rebinds the grid to new bounds (used when the metric scale is applied);
  /// stored features are unchanged, only the coordinate mapping moves.
  void set_bounds(const Eigen::AlignedBox3d& bounds) { bounds_ = bounds; }

  int n_levels() const { return static_cast<int>(resolutions_.size()); }
  int feature_dim() const { return feature_dim_; }
  int total_feature_dim() const { return feature_dim_ * n_levels(); }
  int level_resolution(int level) const { return resolutions_.at(level); }

  Eigen::VectorXd& level_data(int level) { return data_.at(level); }
  const Eigen::VectorXd& level_data(int level) const { return data_.at(level); }

  /// Flat index of feature channel f at vertex (ix, iy, iz) of a level.
  static std::size_t vertex_index(int resolution, int feature_dim, int ix,
                                  int iy, int iz, int f);

  bool contains(const Eigen::Vector3d& x) const;

  /// Interpolated features at x, concatenated coarse-to-fine. Returns false
  /// (and zero features) outside the bounds. `dfeat_dx`, when non-null, is
  /// resized to total_feature_dim x 3 with the spatial derivatives.
  bool query(const Eigen::Vector3d& x, Eigen::VectorXd* features,
             Eigen::Matrix<double, Eigen::Dynamic, 3>* dfeat_dx = nullptr) const;

  /// Scatters dL/dfeatures into the tape entries of the surrounding vertices.
  /// When `dL_dx` is non-null the spatial chain term (dfeat/dx)^T dL/dfeat is
  /// added into it. No-op outside the bounds.
  void accumulate_gradient(const Eigen::Vector3d& x,
                           const Eigen::Ref<const Eigen::VectorXd>& dL_dfeat,
                           GradientTape* tape,
                           Eigen::Vector3d* dL_dx = nullptr) const;

  void fill(double value);

 private:
  Eigen::AlignedBox3d bounds_;
  std::vector<int> resolutions_;
  int feature_dim_;
  std::vector<Eigen::VectorXd> data_;
  std::vector<std::size_t> block_ids_;
};

/// 2D grid over (azimuth, elevation) in the sensor frame with bilinear
/// interpolation, periodic in azimuth and clamped in elevation. Stores one
/// scalar per vertex (the gain model keeps log-gain here).
class WrappedGrid2D {
 public:
  WrappedGrid2D(int n_azimuth, int n_elevation, double elevation_min,
                double elevation_max);

  void register_params(ParamRegistry* reg, const std::string& name);
  bool registered() const { return has_block_; }

  int n_azimuth() const { return n_az_; }
  int n_elevation() const { return n_el_; }
  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }

  /// Bilinear value; optional partial derivatives w.r.t. the query angles.
  double query(double azimuth, double elevation, double* dval_daz = nullptr,
               double* dval_del = nullptr) const;

  /// Scatters dL/dvalue into the tape entries of the four vertices.
  void accumulate_gradient(double azimuth, double elevation, double dL_dval,
                           GradientTape* tape) const;

  void fill(double value) { data_.setConstant(value); }

 private:
  struct Corner {
    int index;
    double weight;
    double dw_daz;
    double dw_del;
  };
  void corners(double azimuth, double elevation, Corner out[4]) const;

  int n_az_;
  int n_el_;
  double el_min_;
  double el_max_;
  Eigen::VectorXd data_;
  std::size_t block_id_ = 0;
  bool has_block_ = false;
};

}  // namespace rdf
