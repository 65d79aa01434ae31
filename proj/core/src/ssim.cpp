// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/ssim.hpp"

#include <cmath>
#include <stdexcept>

namespace rdf {
namespace {

constexpr int kRadius = 5;  // 11-tap window
constexpr double kSigma = 1.5;
constexpr double kC1 = 1e-4;  // (0.01 * range)^2, range = 1
constexpr double kC2 = 9e-4;  // (0.03 * range)^2

const Eigen::Matrix<double, 2 * kRadius + 1, 1>& kernel() {
  static const auto k = [] {
    Eigen::Matrix<double, 2 * kRadius + 1, 1> g;
    for (int i = -kRadius; i <= kRadius; ++i) {
      g[i + kRadius] = std::exp(-0.5 * (i * i) / (kSigma * kSigma));
    }
    g /= g.sum();
    return g;
  }();
  return k;
}

// Reflected index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

void filter_rows(const Eigen::ArrayXXd& in, Eigen::ArrayXXd* out) {
  const auto& g = kernel();
  out->resize(in.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        acc += g[k + kRadius] * in(reflect(r + k, in.rows()), c);
      }
      (*out)(r, c) = acc;
    }
  }
}

void filter_cols(const Eigen::ArrayXXd& in, Eigen::ArrayXXd* out) {
  const auto& g = kernel();
  out->resize(in.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        acc += g[k + kRadius] * in(r, reflect(c + k, in.cols()));
      }
      (*out)(r, c) = acc;
    }
  }
}

// Adjoint of the gather-with-reflection filters: scatter with the same
// reflected indexing (reflection makes the operator non-symmetric at the
// borders, so a plain second filtering would be a wrong adjoint).
void filter_rows_adjoint(const Eigen::ArrayXXd& gout, Eigen::ArrayXXd* gin) {
  const auto& g = kernel();
  for (Eigen::Index c = 0; c < gout.cols(); ++c) {
    for (Eigen::Index r = 0; r < gout.rows(); ++r) {
      const double v = gout(r, c);
      for (int k = -kRadius; k <= kRadius; ++k) {
        (*gin)(reflect(r + k, gout.rows()), c) += g[k + kRadius] * v;
      }
    }
  }
}

void filter_cols_adjoint(const Eigen::ArrayXXd& gout, Eigen::ArrayXXd* gin) {
  const auto& g = kernel();
  for (Eigen::Index c = 0; c < gout.cols(); ++c) {
    for (Eigen::Index r = 0; r < gout.rows(); ++r) {
      const double v = gout(r, c);
      for (int k = -kRadius; k <= kRadius; ++k) {
        (*gin)(r, reflect(c + k, gout.cols())) += g[k + kRadius] * v;
      }
    }
  }
}

}  // namespace

void gaussian_filter(const Eigen::ArrayXXd& in, Eigen::ArrayXXd* out) {
  Eigen::ArrayXXd tmp;
  filter_rows(in, &tmp);
  filter_cols(tmp, out);
}

void gaussian_filter_adjoint(const Eigen::ArrayXXd& gout, Eigen::ArrayXXd* gin) {
  // (rows . cols)^T = cols^T . rows^T
  Eigen::ArrayXXd tmp = Eigen::ArrayXXd::Zero(gout.rows(), gout.cols());
  filter_cols_adjoint(gout, &tmp);
  filter_rows_adjoint(tmp, gin);
}

double masked_ssim(const Eigen::Ref<const Eigen::MatrixXd>& a,
                   const Eigen::Ref<const Eigen::MatrixXd>& b,
                   const MaskMatrix& valid, SsimTerms* terms) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("masked_ssim: shape mismatch");
  }
  if (valid.size() != 0 &&
      (valid.rows() != a.rows() || valid.cols() != a.cols())) {
    throw std::invalid_argument("masked_ssim: mask shape mismatch");
  }
  SsimTerms local;
  SsimTerms& t = terms != nullptr ? *terms : local;
  const Eigen::ArrayXXd aa = a.array();
  const Eigen::ArrayXXd bb = b.array();
  gaussian_filter(aa, &t.mu_a);
  gaussian_filter(bb, &t.mu_b);
  gaussian_filter(aa * aa, &t.p_aa);
  gaussian_filter(bb * bb, &t.p_bb);
  gaussian_filter(aa * bb, &t.p_ab);

  const Eigen::ArrayXXd var_a = t.p_aa - t.mu_a.square();
  const Eigen::ArrayXXd var_b = t.p_bb - t.mu_b.square();
  const Eigen::ArrayXXd cov = t.p_ab - t.mu_a * t.mu_b;
  const Eigen::ArrayXXd a1 = 2.0 * t.mu_a * t.mu_b + kC1;
  const Eigen::ArrayXXd a2 = 2.0 * cov + kC2;
  const Eigen::ArrayXXd b1 = t.mu_a.square() + t.mu_b.square() + kC1;
  const Eigen::ArrayXXd b2 = var_a + var_b + kC2;
  t.map = (a1 * a2) / (b1 * b2);

  double sum = 0.0;
  std::size_t n = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (valid.size() != 0 && valid(r, c) == 0) continue;
      sum += t.map(r, c);
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 1.0;
}

void masked_ssim_backward(const Eigen::Ref<const Eigen::MatrixXd>& a,
                          const Eigen::Ref<const Eigen::MatrixXd>& b,
                          const MaskMatrix& valid, const SsimTerms& terms,
                          double dL_dssim, Eigen::MatrixXd* dL_da) {
  if (dL_da->rows() != a.rows() || dL_da->cols() != a.cols()) {
    throw std::invalid_argument("masked_ssim_backward: gradient shape mismatch");
  }
  // Upstream per-pixel gradient of the masked mean.
  Eigen::ArrayXXd g = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
  std::size_t n = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (valid.size() != 0 && valid(r, c) == 0) continue;
      g(r, c) = 1.0;
      ++n;
    }
  }
  if (n == 0) return;
  g *= dL_dssim / static_cast<double>(n);

  const Eigen::ArrayXXd var_a = terms.p_aa - terms.mu_a.square();
  const Eigen::ArrayXXd var_b = terms.p_bb - terms.mu_b.square();
  const Eigen::ArrayXXd cov = terms.p_ab - terms.mu_a * terms.mu_b;
  const Eigen::ArrayXXd a1 = 2.0 * terms.mu_a * terms.mu_b + kC1;
  const Eigen::ArrayXXd a2 = 2.0 * cov + kC2;
  const Eigen::ArrayXXd b1 = terms.mu_a.square() + terms.mu_b.square() + kC1;
  const Eigen::ArrayXXd b2 = var_a + var_b + kC2;
  const Eigen::ArrayXXd denom = b1 * b2;

  // Partials of the map w.r.t. the five filtered fields (p_* raw products).
  const Eigen::ArrayXXd ds_da1 = a2 / denom;
  const Eigen::ArrayXXd ds_da2 = a1 / denom;
  const Eigen::ArrayXXd ds_db1 = -terms.map / b1;
  const Eigen::ArrayXXd ds_db2 = -terms.map / b2;
  const Eigen::ArrayXXd ds_dpaa = ds_db2;               // var_a = p_aa - mu_a^2
  const Eigen::ArrayXXd ds_dpab = 2.0 * ds_da2;         // cov = p_ab - mu_a mu_b
  // mu_a enters a1 (+2 mu_b), b1 (+2 mu_a), var_a (-2 mu_a via -mu_a^2) and
  // cov (-mu_b via -mu_a mu_b, where ds/dcov = ds_dpab).
  const Eigen::ArrayXXd ds_dmua =
      ds_da1 * 2.0 * terms.mu_b + ds_db1 * 2.0 * terms.mu_a -
      ds_db2 * 2.0 * terms.mu_a - ds_dpab * terms.mu_b;

  Eigen::ArrayXXd grad = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
  gaussian_filter_adjoint(g * ds_dmua, &grad);
  Eigen::ArrayXXd grad_paa = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
  gaussian_filter_adjoint(g * ds_dpaa, &grad_paa);
  grad += 2.0 * a.array() * grad_paa;
  Eigen::ArrayXXd grad_pab = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
  gaussian_filter_adjoint(g * ds_dpab, &grad_pab);
  grad += b.array() * grad_pab;

  dL_da->array() += grad;
}

}  // namespace rdf
