// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/field.hpp"

#include <cmath>
#include <stdexcept>

#include "rdfield/geometry.hpp"
#include "rdfield/sh.hpp"

namespace rdf {

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

void AffineHead::init(int out_dim, int in_dim) {
  W = Eigen::MatrixXd::Zero(out_dim, in_dim);
  b = Eigen::VectorXd::Zero(out_dim);
}

void AffineHead::randomize(Rng* rng, double std_dev) {
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = std_dev * rng->normal();
}

void AffineHead::register_params(ParamRegistry* reg, const std::string& name) {
  if (registered_) throw std::logic_error("head already registered: " + name);
  w_block_ = reg->add_block(name + "/W", W.data(), static_cast<std::size_t>(W.size()));
  b_block_ = reg->add_block(name + "/b", b.data(), static_cast<std::size_t>(b.size()));
  registered_ = true;
}

void AffineHead::accumulate_gradient(const Eigen::Ref<const Eigen::VectorXd>& in,
                                     const Eigen::Ref<const Eigen::VectorXd>& dL_dout,
                                     GradientTape* tape,
                                     Eigen::VectorXd* dL_din) const {
  if (!registered_) throw std::logic_error("head not registered");
  Eigen::Map<Eigen::MatrixXd> gw(tape->block_grad(w_block_), W.rows(), W.cols());
  gw.noalias() += dL_dout * in.transpose();
  Eigen::Map<Eigen::VectorXd> gb(tape->block_grad(b_block_), b.size());
  gb += dL_dout;
  if (dL_din) dL_din->noalias() += W.transpose() * dL_dout;
}

GeometryField::GeometryField(const Eigen::AlignedBox3d& bounds,
                             std::vector<int> resolutions, int feature_dim,
                             int code_dim, double density_bias_init)
    : grid_(bounds, std::move(resolutions), feature_dim), code_dim_(code_dim) {
  if (code_dim_ < 1) throw std::invalid_argument("code_dim must be >= 1");
  density_head_.init(1, grid_.total_feature_dim());
  density_head_.b[0] = density_bias_init;
  code_head_.init(code_dim_, grid_.total_feature_dim());
}

void GeometryField::register_params(ParamRegistry* reg, const std::string& prefix) {
  grid_.register_params(reg, prefix + "/grid");
  density_head_.register_params(reg, prefix + "/density");
  code_head_.register_params(reg, prefix + "/code");
}

void GeometryField::randomize(Rng* rng, double grid_std, double head_std) {
  for (int l = 0; l < grid_.n_levels(); ++l) {
    Eigen::VectorXd& data = grid_.level_data(l);
    for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = grid_std * rng->normal();
  }
  density_head_.randomize(rng, head_std);
  code_head_.randomize(rng, head_std);
}

void GeometryField::query(const Eigen::Vector3d& x, Sample* out,
                          bool need_code) const {
  out->inside = grid_.query(x, &out->features);
  if (!out->inside) {
    out->alpha = 0.0;
    out->z = 0.0;
    out->code.setZero(need_code ? code_dim_ : 0);
    return;
  }
  out->z = density_head_.W.row(0).dot(out->features) + density_head_.b[0];
  out->alpha = logistic(out->z);
  if (need_code) {
    out->code = code_head_.apply(out->features);
  } else {
    out->code.resize(0);
  }
}

double GeometryField::query_alpha(const Eigen::Vector3d& x,
                                  Eigen::Vector3d* dalpha_dx) const {
  Eigen::VectorXd features;
  Eigen::Matrix<double, Eigen::Dynamic, 3> dfeat_dx;
  const bool inside =
      grid_.query(x, &features, dalpha_dx ? &dfeat_dx : nullptr);
  if (!inside) {
    if (dalpha_dx) dalpha_dx->setZero();
    return 0.0;
  }
  const double z = density_head_.W.row(0).dot(features) + density_head_.b[0];
  const double alpha = logistic(z);
  if (dalpha_dx) {
    const double dz = alpha * (1.0 - alpha);
    *dalpha_dx = dz * (density_head_.W.row(0) * dfeat_dx).transpose();
  }
  return alpha;
}

void GeometryField::accumulate_gradient(const Eigen::Vector3d& x, const Sample& s,
                                        double dL_dalpha,
                                        const Eigen::VectorXd* dL_dcode,
                                        GradientTape* tape,
                                        Eigen::Vector3d* dL_dx) const {
  if (!s.inside) return;
  const double dL_dz = dL_dalpha * s.alpha * (1.0 - s.alpha);
  Eigen::VectorXd dL_dfeat = Eigen::VectorXd::Zero(s.features.size());
  density_head_.accumulate_gradient(
      s.features, Eigen::VectorXd::Constant(1, dL_dz), tape, &dL_dfeat);
  if (dL_dcode) {
    code_head_.accumulate_gradient(s.features, *dL_dcode, tape, &dL_dfeat);
  }
  grid_.accumulate_gradient(x, dL_dfeat, tape, dL_dx);
}

void distill_into(const GeometryField& src, GeometryField* dst) {
  const MultiResGrid& a = src.grid();
  MultiResGrid& b = dst->grid();
  if (a.n_levels() != b.n_levels() || a.feature_dim() != b.feature_dim() ||
      src.code_dim() != dst->code_dim()) {
    throw std::invalid_argument("distillation requires identical field shapes");
  }
  for (int l = 0; l < a.n_levels(); ++l) {
    if (a.level_resolution(l) != b.level_resolution(l)) {
      throw std::invalid_argument("distillation requires identical resolutions");
    }
    b.level_data(l) = a.level_data(l);
  }
  dst->density_head().W = src.density_head().W;
  dst->density_head().b = src.density_head().b;
  dst->code_head().W = src.code_head().W;
  dst->code_head().b = src.code_head().b;
}

GeometryField distill_geometry(const GeometryField& camera) {
  std::vector<int> res;
  for (int l = 0; l < camera.grid().n_levels(); ++l) {
    res.push_back(camera.grid().level_resolution(l));
  }
  GeometryField radar(camera.grid().bounds(), res, camera.grid().feature_dim(),
                      camera.code_dim());
  distill_into(camera, &radar);
  return radar;
}

BRDFConfig BRDFConfig::geometric(int count, double rho_min, double rho_max) {
  if (count < 1 || !(rho_min > 0.0) || !(rho_max > rho_min)) {
    throw std::invalid_argument("bad BRDF basis parameters");
  }
  BRDFConfig c;
  c.roughnesses.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    c.roughnesses.push_back(rho_min * std::pow(rho_max / rho_min, t));
  }
  return c;
}

void brdf_bases(const BRDFConfig& config, double u, Eigen::VectorXd* beta,
                Eigen::VectorXd* dbeta_du) {
  const int n = config.count();
  beta->resize(n);
  if (dbeta_du) dbeta_du->resize(n);
  const double m = std::max(-u, 0.0);
  for (int i = 0; i < n; ++i) {
    const double inv_rho = 1.0 / config.roughnesses[i];
    const double v = std::exp(-inv_rho * (1.0 - m));
    (*beta)[i] = v;
    // d(beta)/du = -beta / rho on the retroreflective side (u < 0), else 0.
    if (dbeta_du) (*dbeta_du)[i] = u < 0.0 ? -inv_rho * v : 0.0;
  }
}

RadarAppearance::RadarAppearance(int code_dim, BRDFConfig brdf, int sh_degree,
                                 bool use_sh, Activation activation,
                                 int hidden_width)
    : code_dim_(code_dim),
      brdf_(std::move(brdf)),
      sh_degree_(sh_degree),
      use_sh_(use_sh),
      activation_(activation),
      hidden_width_(hidden_width) {
  const int in = input_dim();
  if (hidden_width_ > 0) {
    hidden_.init(hidden_width_, in);
    head_.init(1, hidden_width_);
  } else {
    head_.init(1, in);
  }
}

int RadarAppearance::input_dim() const {
  return code_dim_ + brdf_.count() + (use_sh_ ? sh_basis_size(sh_degree_) : 0);
}

void RadarAppearance::register_params(ParamRegistry* reg, const std::string& prefix) {
  if (hidden_width_ > 0) hidden_.register_params(reg, prefix + "/hidden");
  head_.register_params(reg, prefix + "/head");
}

void RadarAppearance::randomize(Rng* rng, double std_dev) {
  if (hidden_width_ > 0) hidden_.randomize(rng, std_dev);
  head_.randomize(rng, std_dev);
}

void RadarAppearance::query(const Eigen::Ref<const Eigen::VectorXd>& code,
                            const Eigen::Vector3d& omega,
                            const Eigen::Vector3d& normal, Eval* out) const {
  if (code.size() != code_dim_) throw std::invalid_argument("bad code size");
  out->omega = omega;
  out->normal = normal;
  out->u = omega.dot(normal);

  out->input.resize(input_dim());
  out->input.head(code_dim_) = code;
  Eigen::VectorXd beta;
  brdf_bases(brdf_, out->u, &beta);
  out->input.segment(code_dim_, brdf_.count()) = beta;
  if (use_sh_) {
    eval_sh(sh_degree_, omega,
            out->input.data() + code_dim_ + brdf_.count());
  }

  if (hidden_width_ > 0) {
    out->hidden_pre = hidden_.apply(out->input);
    out->z = head_.W.row(0).dot(out->hidden_pre.array().tanh().matrix()) + head_.b[0];
  } else {
    out->hidden_pre.resize(0);
    out->z = head_.W.row(0).dot(out->input) + head_.b[0];
  }
  out->c_r = activation_ == Activation::kExp ? std::exp(out->z) : softplus(out->z);
}

void RadarAppearance::accumulate_gradient(const Eval& eval, double dL_dcr,
                                          GradientTape* tape,
                                          Eigen::VectorXd* dL_dcode,
                                          Eigen::Vector3d* dL_domega,
                                          Eigen::Vector3d* dL_dnormal) const {
  const double dact =
      activation_ == Activation::kExp ? eval.c_r : logistic(eval.z);
  const double dL_dz = dL_dcr * dact;

  Eigen::VectorXd dL_din = Eigen::VectorXd::Zero(eval.input.size());
  const Eigen::VectorXd gout = Eigen::VectorXd::Constant(1, dL_dz);
  if (hidden_width_ > 0) {
    const Eigen::VectorXd h = eval.hidden_pre.array().tanh().matrix();
    Eigen::VectorXd dL_dh = Eigen::VectorXd::Zero(hidden_width_);
    head_.accumulate_gradient(h, gout, tape, &dL_dh);
    const Eigen::VectorXd dL_dhpre =
        (dL_dh.array() * (1.0 - h.array().square())).matrix();
    hidden_.accumulate_gradient(eval.input, dL_dhpre, tape, &dL_din);
  } else {
    head_.accumulate_gradient(eval.input, gout, tape, &dL_din);
  }

  if (dL_dcode) *dL_dcode += dL_din.head(code_dim_);
  if (dL_domega || dL_dnormal) {
    Eigen::VectorXd beta, dbeta_du;
    brdf_bases(brdf_, eval.u, &beta, &dbeta_du);
    const double dL_du =
        dL_din.segment(code_dim_, brdf_.count()).dot(dbeta_du);
    if (dL_domega) *dL_domega += dL_du * eval.normal;
    if (dL_dnormal) *dL_dnormal += dL_du * eval.omega;
    if (use_sh_ && dL_domega) {
      const int s = sh_basis_size(sh_degree_);
      Eigen::VectorXd sh(s);
      Eigen::Matrix<double, Eigen::Dynamic, 3> jac;
      eval_sh(sh_degree_, eval.omega, sh.data(), &jac);
      dL_domega->noalias() +=
          jac.transpose() * dL_din.segment(code_dim_ + brdf_.count(), s);
    }
  }
}

CameraAppearance::CameraAppearance(int code_dim, int sh_degree)
    : code_dim_(code_dim), sh_degree_(sh_degree) {
  head_.init(3, code_dim_ + sh_basis_size(sh_degree_));
}

void CameraAppearance::register_params(ParamRegistry* reg, const std::string& prefix) {
  head_.register_params(reg, prefix + "/color");
}

void CameraAppearance::randomize(Rng* rng, double std_dev) {
  head_.randomize(rng, std_dev);
}

void CameraAppearance::query(const Eigen::Ref<const Eigen::VectorXd>& code,
                             const Eigen::Vector3d& omega, Eval* out) const {
  if (code.size() != code_dim_) throw std::invalid_argument("bad code size");
  const int s = sh_basis_size(sh_degree_);
  out->input.resize(code_dim_ + s);
  out->input.head(code_dim_) = code;
  eval_sh(sh_degree_, omega, out->input.data() + code_dim_);
  out->z = head_.apply(out->input);
  for (int c = 0; c < 3; ++c) out->rgb[c] = logistic(out->z[c]);
}

void CameraAppearance::accumulate_gradient(const Eval& eval,
                                           const Eigen::Vector3d& dL_drgb,
                                           GradientTape* tape,
                                           Eigen::VectorXd* dL_dcode) const {
  Eigen::Vector3d dL_dz;
  for (int c = 0; c < 3; ++c) {
    dL_dz[c] = dL_drgb[c] * eval.rgb[c] * (1.0 - eval.rgb[c]);
  }
  Eigen::VectorXd dL_din = Eigen::VectorXd::Zero(eval.input.size());
  head_.accumulate_gradient(eval.input, dL_dz, tape, &dL_din);
  if (dL_dcode) *dL_dcode += dL_din.head(code_dim_);
}

NormalField::NormalField(const Eigen::AlignedBox3d& bounds,
                         std::vector<int> resolutions)
    : grid_(bounds, std::move(resolutions), 3) {
  // Start as a well-conditioned constant up-vector so the normalization has
  // nonvanishing gradients from the first iteration.
  Eigen::VectorXd& level0 = grid_.level_data(0);
  for (Eigen::Index i = 2; i < level0.size(); i += 3) level0[i] = 1.0;
}

void NormalField::register_params(ParamRegistry* reg, const std::string& prefix) {
  grid_.register_params(reg, prefix + "/grid");
}

void NormalField::query(const Eigen::Vector3d& x, Eval* out) const {
  Eigen::VectorXd features;
  const bool inside = grid_.query(x, &features);
  out->raw.setZero();
  if (inside) {
    for (int l = 0; l < grid_.n_levels(); ++l) {
      out->raw += features.segment<3>(3 * l);
    }
  }
  out->raw_norm = out->raw.norm();
  out->degenerate = !inside || out->raw_norm < 1e-8;
  out->n = out->degenerate ? Eigen::Vector3d::UnitZ()
                           : Eigen::Vector3d(out->raw / out->raw_norm);
}

void NormalField::accumulate_gradient(const Eigen::Vector3d& x, const Eval& eval,
                                      const Eigen::Vector3d& dL_dn,
                                      GradientTape* tape,
                                      Eigen::Vector3d* dL_dx) const {
  if (eval.degenerate) return;
  // d(normalize)/d(raw) = (I - n n^T) / ||raw||.
  const Eigen::Vector3d dL_draw =
      (dL_dn - eval.n * eval.n.dot(dL_dn)) / eval.raw_norm;
  Eigen::VectorXd dL_dfeat(3 * grid_.n_levels());
  for (int l = 0; l < grid_.n_levels(); ++l) {
    dL_dfeat.segment<3>(3 * l) = dL_draw;
  }
  grid_.accumulate_gradient(x, dL_dfeat, tape, dL_dx);
}

AntennaGainModel::AntennaGainModel(int n_antenna, int n_azimuth, int n_elevation) {
  if (n_antenna < 1) throw std::invalid_argument("need at least one antenna");
  grids_.reserve(static_cast<std::size_t>(n_antenna));
  for (int k = 0; k < n_antenna; ++k) {
    grids_.emplace_back(n_azimuth, n_elevation, -M_PI / 2.0, M_PI / 2.0);
  }
}

void AntennaGainModel::register_params(ParamRegistry* reg, const std::string& prefix) {
  for (std::size_t k = 0; k < grids_.size(); ++k) {
    grids_[k].register_params(reg, prefix + "/antenna" + std::to_string(k));
  }
}

void AntennaGainModel::query(int k, const Eigen::Vector3d& dir_sensor,
                             Eval* out) const {
  direction_to_az_el(dir_sensor, &out->azimuth, &out->elevation);
  out->log_gain = grids_.at(k).query(out->azimuth, out->elevation);
  out->gain = std::exp(out->log_gain);
}

void AntennaGainModel::accumulate_gradient(int k, const Eigen::Vector3d& dir_sensor,
                                           const Eval& eval, double dL_dgain,
                                           GradientTape* tape,
                                           Eigen::Vector3d* dL_ddir) const {
  const double dL_dlog = dL_dgain * eval.gain;
  const WrappedGrid2D& g = grids_.at(k);
  g.accumulate_gradient(eval.azimuth, eval.elevation, dL_dlog, tape);
  if (dL_ddir) {
    double dval_daz = 0.0, dval_del = 0.0;
    g.query(eval.azimuth, eval.elevation, &dval_daz, &dval_del);
    const double x = dir_sensor.x(), y = dir_sensor.y(), z = dir_sensor.z();
    const double rxy2 = std::max(x * x + y * y, 1e-12);
    const Eigen::Vector3d daz_ddir(-y / rxy2, x / rxy2, 0.0);
    const double wz = std::sqrt(std::max(1.0 - z * z, 1e-12));
    const Eigen::Vector3d del_ddir(0.0, 0.0, 1.0 / wz);
    dL_ddir->noalias() +=
        dL_dlog * (dval_daz * daz_ddir + dval_del * del_ddir);
  }
}

SceneField::SceneField(const FieldConfig& cfg)
    : config(cfg),
      brdf(BRDFConfig::geometric(cfg.brdf_count, cfg.brdf_rho_min, cfg.brdf_rho_max)),
      geometry_camera(cfg.bounds, cfg.resolutions, cfg.feature_dim, cfg.code_dim,
                      cfg.density_bias_init),
      geometry_radar(cfg.bounds, cfg.resolutions, cfg.feature_dim, cfg.code_dim,
                     cfg.density_bias_init),
      camera_appearance(cfg.code_dim, cfg.sh_degree),
      radar_appearance(cfg.code_dim, brdf, cfg.sh_degree, cfg.use_sh,
                       cfg.reflectance_activation, cfg.radar_hidden_width),
      normals(cfg.bounds, cfg.normal_resolutions),
      gains(cfg.n_antenna, cfg.gain_azimuth, cfg.gain_elevation) {}

void SceneField::register_params(ParamRegistry* reg) {
  geometry_camera.register_params(reg, "camera_geometry");
  camera_appearance.register_params(reg, "camera_appearance");
  geometry_radar.register_params(reg, "radar_geometry");
  radar_appearance.register_params(reg, "radar_appearance");
  normals.register_params(reg, "normals");
  gains.register_params(reg, "gains");
}

void SceneField::randomize(Rng* rng) {
  geometry_camera.randomize(rng, 1e-2, 1e-1);
  camera_appearance.randomize(rng, 1e-1);
  geometry_radar.randomize(rng, 1e-2, 1e-1);
  radar_appearance.randomize(rng, 1e-1);
}

}  // namespace rdf
