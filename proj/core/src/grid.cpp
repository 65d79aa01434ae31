// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace rdf {

MultiResGrid::MultiResGrid(const Eigen::AlignedBox3d& bounds,
                           std::vector<int> resolutions, int feature_dim)
    : bounds_(bounds), resolutions_(std::move(resolutions)), feature_dim_(feature_dim) {
  if (bounds_.isEmpty()) throw std::invalid_argument("grid bounds are empty");
  if (resolutions_.empty()) throw std::invalid_argument("grid needs >= 1 level");
  if (feature_dim_ < 1) throw std::invalid_argument("feature_dim must be >= 1");
  for (std::size_t i = 0; i < resolutions_.size(); ++i) {
    if (resolutions_[i] < 2) throw std::invalid_argument("level resolution must be >= 2");
    if (i > 0 && resolutions_[i] <= resolutions_[i - 1]) {
      throw std::invalid_argument("level resolutions must be strictly increasing");
    }
  }
  data_.reserve(resolutions_.size());
  for (int res : resolutions_) {
    const std::size_t n =
        static_cast<std::size_t>(res) * res * res * static_cast<std::size_t>(feature_dim_);
    data_.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  }
}

void MultiResGrid::register_params(ParamRegistry* reg, const std::string& prefix) {
  if (registered()) throw std::logic_error("grid already registered");
  for (int l = 0; l < n_levels(); ++l) {
    block_ids_.push_back(reg->add_block(prefix + "/level" + std::to_string(l),
                                        data_[l].data(),
                                        static_cast<std::size_t>(data_[l].size())));
  }
}

std::size_t MultiResGrid::vertex_index(int resolution, int feature_dim, int ix,
                                       int iy, int iz, int f) {
  return (static_cast<std::size_t>(iz) * resolution + iy) * resolution * feature_dim +
         static_cast<std::size_t>(ix) * feature_dim + f;
}

bool MultiResGrid::contains(const Eigen::Vector3d& x) const {
  return (x.array() >= bounds_.min().array()).all() &&
         (x.array() <= bounds_.max().array()).all();
}

namespace {

struct CellLookup {
  int i0[3];
  double frac[3];
  double dudx[3];  // d(grid coordinate)/d(world coordinate) per axis
};

CellLookup locate(const Eigen::AlignedBox3d& bounds, int res,
                  const Eigen::Vector3d& x) {
  CellLookup c;
  for (int d = 0; d < 3; ++d) {
    const double extent = bounds.max()[d] - bounds.min()[d];
    const double u = (x[d] - bounds.min()[d]) / extent * (res - 1);
    c.dudx[d] = (res - 1) / extent;
    int i0 = static_cast<int>(std::floor(u));
    if (i0 < 0) i0 = 0;
    if (i0 > res - 2) i0 = res - 2;
    c.i0[d] = i0;
    double f = u - i0;
    if (f < 0.0) f = 0.0;
    if (f > 1.0) f = 1.0;
    c.frac[d] = f;
  }
  return c;
}

}  // namespace

bool MultiResGrid::query(const Eigen::Vector3d& x, Eigen::VectorXd* features,
                         Eigen::Matrix<double, Eigen::Dynamic, 3>* dfeat_dx) const {
  features->setZero(total_feature_dim());
  if (dfeat_dx) dfeat_dx->setZero(total_feature_dim(), 3);
  if (!contains(x)) return false;

  const int fd = feature_dim_;
  for (int l = 0; l < n_levels(); ++l) {
    const int res = resolutions_[l];
    const CellLookup c = locate(bounds_, res, x);
    const Eigen::VectorXd& data = data_[l];
    const int base = l * fd;

    for (int dz = 0; dz < 2; ++dz) {
      const double wz = dz ? c.frac[2] : 1.0 - c.frac[2];
      const double gz = dz ? 1.0 : -1.0;
      for (int dy = 0; dy < 2; ++dy) {
        const double wy = dy ? c.frac[1] : 1.0 - c.frac[1];
        const double gy = dy ? 1.0 : -1.0;
        for (int dx = 0; dx < 2; ++dx) {
          const double wx = dx ? c.frac[0] : 1.0 - c.frac[0];
          const double gx = dx ? 1.0 : -1.0;
          const double w = wx * wy * wz;
          const std::size_t idx =
              vertex_index(res, fd, c.i0[0] + dx, c.i0[1] + dy, c.i0[2] + dz, 0);
          for (int f = 0; f < fd; ++f) {
            const double v = data[static_cast<Eigen::Index>(idx + f)];
            (*features)[base + f] += w * v;
            if (dfeat_dx) {
              (*dfeat_dx)(base + f, 0) += gx * wy * wz * c.dudx[0] * v;
              (*dfeat_dx)(base + f, 1) += wx * gy * wz * c.dudx[1] * v;
              (*dfeat_dx)(base + f, 2) += wx * wy * gz * c.dudx[2] * v;
            }
          }
        }
      }
    }
  }
  return true;
}

void MultiResGrid::accumulate_gradient(const Eigen::Vector3d& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& dL_dfeat,
                                       GradientTape* tape,
                                       Eigen::Vector3d* dL_dx) const {
  if (!contains(x)) return;
  if (!registered()) throw std::logic_error("grid not registered with a ParamRegistry");

  const int fd = feature_dim_;
  for (int l = 0; l < n_levels(); ++l) {
    const int res = resolutions_[l];
    const CellLookup c = locate(bounds_, res, x);
    double* gblock = tape->block_grad(block_ids_[l]);
    const Eigen::VectorXd& data = data_[l];
    const int base = l * fd;

    for (int dz = 0; dz < 2; ++dz) {
      const double wz = dz ? c.frac[2] : 1.0 - c.frac[2];
      const double gz = dz ? 1.0 : -1.0;
      for (int dy = 0; dy < 2; ++dy) {
        const double wy = dy ? c.frac[1] : 1.0 - c.frac[1];
        const double gy = dy ? 1.0 : -1.0;
        for (int dx = 0; dx < 2; ++dx) {
          const double wx = dx ? c.frac[0] : 1.0 - c.frac[0];
          const double gx = dx ? 1.0 : -1.0;
          const double w = wx * wy * wz;
          const std::size_t idx =
              vertex_index(res, fd, c.i0[0] + dx, c.i0[1] + dy, c.i0[2] + dz, 0);
          for (int f = 0; f < fd; ++f) {
            const double g = dL_dfeat[base + f];
            gblock[idx + f] += w * g;
            if (dL_dx) {
              const double v = data[static_cast<Eigen::Index>(idx + f)];
              (*dL_dx)[0] += g * gx * wy * wz * c.dudx[0] * v;
              (*dL_dx)[1] += g * wx * gy * wz * c.dudx[1] * v;
              (*dL_dx)[2] += g * wx * wy * gz * c.dudx[2] * v;
            }
          }
        }
      }
    }
  }
}

void MultiResGrid::fill(double value) {
  for (auto& level : data_) level.setConstant(value);
}

WrappedGrid2D::WrappedGrid2D(int n_azimuth, int n_elevation, double elevation_min,
                             double elevation_max)
    : n_az_(n_azimuth),
      n_el_(n_elevation),
      el_min_(elevation_min),
      el_max_(elevation_max),
      data_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_azimuth) * n_elevation)) {
  if (n_az_ < 2 || n_el_ < 2) throw std::invalid_argument("gain grid needs >= 2x2 vertices");
  if (!(el_min_ < el_max_)) throw std::invalid_argument("bad elevation range");
}

void WrappedGrid2D::register_params(ParamRegistry* reg, const std::string& name) {
  if (has_block_) throw std::logic_error("gain grid already registered");
  block_id_ = reg->add_block(name, data_.data(), static_cast<std::size_t>(data_.size()));
  has_block_ = true;
}

void WrappedGrid2D::corners(double azimuth, double elevation, Corner out[4]) const {
  // Azimuth: n_az cells tile [-pi, pi) with vertex n_az wrapping to vertex 0.
  double ua = (azimuth + M_PI) / (2.0 * M_PI) * n_az_;
  ua -= std::floor(ua / n_az_) * n_az_;  // fold into [0, n_az)
  int ia0 = static_cast<int>(std::floor(ua));
  if (ia0 >= n_az_) ia0 = n_az_ - 1;
  const double fa = ua - ia0;
  const int ia1 = (ia0 + 1) % n_az_;
  const double dua_daz = n_az_ / (2.0 * M_PI);

  // Elevation: clamped vertex grid over [el_min, el_max].
  const double extent = el_max_ - el_min_;
  double ue = (elevation - el_min_) / extent * (n_el_ - 1);
  double due_del = (n_el_ - 1) / extent;
  if (ue <= 0.0) {
    ue = 0.0;
    due_del = 0.0;
  } else if (ue >= n_el_ - 1) {
    ue = n_el_ - 1;
    due_del = 0.0;
  }
  int ie0 = static_cast<int>(std::floor(ue));
  if (ie0 > n_el_ - 2) ie0 = n_el_ - 2;
  const double fe = ue - ie0;

  const auto idx = [this](int ia, int ie) { return ie * n_az_ + ia; };
  out[0] = {idx(ia0, ie0), (1 - fa) * (1 - fe), -(1 - fe) * dua_daz, -(1 - fa) * due_del};
  out[1] = {idx(ia1, ie0), fa * (1 - fe), (1 - fe) * dua_daz, -fa * due_del};
  out[2] = {idx(ia0, ie0 + 1), (1 - fa) * fe, -fe * dua_daz, (1 - fa) * due_del};
  out[3] = {idx(ia1, ie0 + 1), fa * fe, fe * dua_daz, fa * due_del};
}

double WrappedGrid2D::query(double azimuth, double elevation, double* dval_daz,
                            double* dval_del) const {
  Corner c[4];
  corners(azimuth, elevation, c);
  double v = 0.0, daz = 0.0, del = 0.0;
  for (const Corner& k : c) {
    const double d = data_[k.index];
    v += k.weight * d;
    daz += k.dw_daz * d;
    del += k.dw_del * d;
  }
  if (dval_daz) *dval_daz = daz;
  if (dval_del) *dval_del = del;
  return v;
}

void WrappedGrid2D::accumulate_gradient(double azimuth, double elevation,
                                        double dL_dval, GradientTape* tape) const {
  if (!has_block_) throw std::logic_error("gain grid not registered");
  Corner c[4];
  corners(azimuth, elevation, c);
  double* g = tape->block_grad(block_id_);
  for (const Corner& k : c) g[k.index] += k.weight * dL_dval;
}

}  // namespace rdf
