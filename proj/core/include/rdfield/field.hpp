// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rdfield/grid.hpp"
#include "rdfield/params.hpp"
#include "rdfield/rng.hpp"

namespace rdf {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double softplus(double z);

/// One learnable affine map y = W x + b.
struct AffineHead {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;

  void init(int out_dim, int in_dim);
  void randomize(Rng* rng, double std_dev);
  void register_params(ParamRegistry* reg, const std::string& name);
  bool registered() const { return registered_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& in) const {
    return W * in + b;
  }

  /// Accumulates dL/dW and dL/db; when dL_din is non-null adds W^T dL_dout
  /// into it (caller zeroes it first).
  void accumulate_gradient(const Eigen::Ref<const Eigen::VectorXd>& in,
                           const Eigen::Ref<const Eigen::VectorXd>& dL_dout,
                           GradientTape* tape,
                           Eigen::VectorXd* dL_din = nullptr) const;

 private:
  std::size_t w_block_ = 0;
  std::size_t b_block_ = 0;
  bool registered_ = false;
};

/// Occupancy + geometry-code field: a multi-resolution grid decoded by two
/// affine heads. Occupancy uses a logistic squash so alpha is always in
/// [0,1]; queries outside the grid bounds return alpha 0 and a zero code.
class GeometryField {
 public:
  GeometryField(const Eigen::AlignedBox3d& bounds, std::vector<int> resolutions,
                int feature_dim, int code_dim, double density_bias_init = -3.0);

  void register_params(ParamRegistry* reg, const std::string& prefix);
  void randomize(Rng* rng, double grid_std, double head_std);

  struct Sample {
    bool inside = false;
    double alpha = 0.0;
    double z = 0.0;            // density logit before the squash
    Eigen::VectorXd features;  // concatenated grid features
    Eigen::VectorXd code;      // l_geo (empty when need_code = false)
  };

  void query(const Eigen::Vector3d& x, Sample* out, bool need_code = true) const;

  /// Alpha-only fast path; optional spatial derivative (zero outside bounds).
  double query_alpha(const Eigen::Vector3d& x,
                     Eigen::Vector3d* dalpha_dx = nullptr) const;

  /// Backward for one sample: dL/dalpha and (optionally) dL/dcode flow into
  /// the grid and head parameters; the spatial chain term lands in dL_dx when
  /// requested. No-op for samples outside the bounds.
  void accumulate_gradient(const Eigen::Vector3d& x, const Sample& s,
                           double dL_dalpha, const Eigen::VectorXd* dL_dcode,
                           GradientTape* tape,
                           Eigen::Vector3d* dL_dx = nullptr) const;

  MultiResGrid& grid() { return grid_; }
  const MultiResGrid& grid() const { return grid_; }
  AffineHead& density_head() { return density_head_; }
  const AffineHead& density_head() const { return density_head_; }
  AffineHead& code_head() { return code_head_; }
  const AffineHead& code_head() const { return code_head_; }
  int code_dim() const { return code_dim_; }

 private:
  MultiResGrid grid_;
  AffineHead density_head_;
  AffineHead code_head_;
  int code_dim_;
};

/// Deep copy of grid features and head weights from a trained camera field
/// into an already-constructed radar field of identical shape. Registered
/// parameter blocks of `dst` keep pointing at its (overwritten) storage.
void distill_into(const GeometryField& src, GeometryField* dst);

/// Convenience form returning a fresh unregistered copy.
GeometryField distill_geometry(const GeometryField& camera);

/// Retroreflectance basis set: geometrically spaced roughness values.
struct BRDFConfig {
  std::vector<double> roughnesses;

  static BRDFConfig geometric(int count = 11, double rho_min = 0.05,
                              double rho_max = 5.0);
  int count() const { return static_cast<int>(roughnesses.size()); }
};

/// Evaluates beta_rho(u) = exp(-(1/rho) (1 - max(-u, 0))) for u = omega.n
/// over every rho in the config; optional derivative w.r.t. u. The function
/// has a kink at u = 0 (gradient checks must stay clear of it).
void brdf_bases(const BRDFConfig& config, double u, Eigen::VectorXd* beta,
                Eigen::VectorXd* dbeta_du = nullptr);

/// Radar reflectance head: affine (optionally one tanh hidden layer) over
/// [geometry code | BRDF basis values | SH-encoded view direction], squashed
/// to a non-negative scalar.
class RadarAppearance {
 public:
  enum class Activation { kSoftplus, kExp };

  RadarAppearance(int code_dim, BRDFConfig brdf, int sh_degree, bool use_sh,
                  Activation activation = Activation::kSoftplus,
                  int hidden_width = 0);

  void register_params(ParamRegistry* reg, const std::string& prefix);
  void randomize(Rng* rng, double std_dev);

  struct Eval {
    double c_r = 0.0;
    double z = 0.0;              // pre-activation output
    Eigen::VectorXd input;       // assembled head input
    Eigen::VectorXd hidden_pre;  // pre-tanh activations (hidden layer only)
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    double u = 0.0;  // omega . normal
  };

  void query(const Eigen::Ref<const Eigen::VectorXd>& code,
             const Eigen::Vector3d& omega, const Eigen::Vector3d& normal,
             Eval* out) const;

  /// Backward: head parameter grads plus optional input-side gradients.
  void accumulate_gradient(const Eval& eval, double dL_dcr, GradientTape* tape,
                           Eigen::VectorXd* dL_dcode = nullptr,
                           Eigen::Vector3d* dL_domega = nullptr,
                           Eigen::Vector3d* dL_dnormal = nullptr) const;

  const BRDFConfig& brdf() const { return brdf_; }
  int sh_degree() const { return sh_degree_; }
  bool use_sh() const { return use_sh_; }
  Activation activation() const { return activation_; }
  int input_dim() const;
  AffineHead& head() { return head_; }
  AffineHead& hidden() { return hidden_; }
  int hidden_width() const { return hidden_width_; }

 private:
  int code_dim_;
  BRDFConfig brdf_;
  int sh_degree_;
  bool use_sh_;
  Activation activation_;
  int hidden_width_;
  AffineHead hidden_;  // used when hidden_width_ > 0
  AffineHead head_;
};

/// View-dependent RGB head over [geometry code | SH(omega)], logistic per
/// channel so colors stay in [0,1].
class CameraAppearance {
 public:
  CameraAppearance(int code_dim, int sh_degree);

  void register_params(ParamRegistry* reg, const std::string& prefix);
  void randomize(Rng* rng, double std_dev);

  struct Eval {
    Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
    Eigen::Vector3d z = Eigen::Vector3d::Zero();
    Eigen::VectorXd input;
  };

  void query(const Eigen::Ref<const Eigen::VectorXd>& code,
             const Eigen::Vector3d& omega, Eval* out) const;
  void accumulate_gradient(const Eval& eval, const Eigen::Vector3d& dL_drgb,
                           GradientTape* tape,
                           Eigen::VectorXd* dL_dcode = nullptr) const;

  int sh_degree() const { return sh_degree_; }
  AffineHead& head() { return head_; }

 private:
  int code_dim_;
  int sh_degree_;
  AffineHead head_;
};

/// Unit surface-normal field: a multi-resolution grid of 3-vectors whose
/// per-level contributions are summed and normalized. The raw sum is guarded
/// against vanishing norm, where the field returns +z with zero gradient.
class NormalField {
 public:
  NormalField(const Eigen::AlignedBox3d& bounds, std::vector<int> resolutions);

  void register_params(ParamRegistry* reg, const std::string& prefix);

  struct Eval {
    Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d raw = Eigen::Vector3d::Zero();
    double raw_norm = 0.0;
    bool degenerate = true;
  };

  void query(const Eigen::Vector3d& x, Eval* out) const;
  void accumulate_gradient(const Eigen::Vector3d& x, const Eval& eval,
                           const Eigen::Vector3d& dL_dn, GradientTape* tape,
                           Eigen::Vector3d* dL_dx = nullptr) const;

  MultiResGrid& grid() { return grid_; }
  const MultiResGrid& grid() const { return grid_; }

 private:
  MultiResGrid grid_;
};

/// Learnable per-antenna gain over sensor-frame direction. Positivity is
/// guaranteed by storing log-gain: g_k = exp(grid_k(azimuth, elevation)).
class AntennaGainModel {
 public:
  AntennaGainModel(int n_antenna, int n_azimuth = 16, int n_elevation = 8);

  void register_params(ParamRegistry* reg, const std::string& prefix);

  struct Eval {
    double gain = 1.0;
    double log_gain = 0.0;
    double azimuth = 0.0;
    double elevation = 0.0;
  };

  /// `dir_sensor` is the unit view direction expressed in the sensor frame.
  void query(int k, const Eigen::Vector3d& dir_sensor, Eval* out) const;

  /// Backward; `dL_ddir` receives the chain through (azimuth, elevation).
  void accumulate_gradient(int k, const Eigen::Vector3d& dir_sensor,
                           const Eval& eval, double dL_dgain, GradientTape* tape,
                           Eigen::Vector3d* dL_ddir = nullptr) const;

  int n_antenna() const { return static_cast<int>(grids_.size()); }
  WrappedGrid2D& grid(int k) { return grids_.at(k); }
  const WrappedGrid2D& grid(int k) const { return grids_.at(k); }

 private:
  std::vector<WrappedGrid2D> grids_;
};

/// Shape and initialization settings for a full scene field.
struct FieldConfig {
  Eigen::AlignedBox3d bounds;
  std::vector<int> resolutions = {16, 32, 64};
  int feature_dim = 2;
  int code_dim = 15;
  int sh_degree = 4;
  bool use_sh = true;
  int brdf_count = 11;
  double brdf_rho_min = 0.05;
  double brdf_rho_max = 5.0;
  int n_antenna = 8;
  int gain_azimuth = 16;
  int gain_elevation = 8;
  int radar_hidden_width = 0;
  RadarAppearance::Activation reflectance_activation =
      RadarAppearance::Activation::kSoftplus;
  double density_bias_init = -3.0;
  std::vector<int> normal_resolutions = {16, 32};
};

/// The complete differentiable scene representation: camera and radar
/// geometry, both appearance heads, normals, and antenna gains.
struct SceneField {
  explicit SceneField(const FieldConfig& config);

  /// Registers all components in the canonical checkpoint order.
  void register_params(ParamRegistry* reg);
  void randomize(Rng* rng);

  FieldConfig config;
  BRDFConfig brdf;
  GeometryField geometry_camera;
  GeometryField geometry_radar;
  CameraAppearance camera_appearance;
  RadarAppearance radar_appearance;
  NormalField normals;
  AntennaGainModel gains;
};

}  // namespace rdf
