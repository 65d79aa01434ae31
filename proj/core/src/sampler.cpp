// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdfield/field.hpp"

namespace rdf {

ProposalField::ProposalField(const Eigen::AlignedBox3d& bounds, int resolution,
                             double logit_init)
    : grid_(bounds, {resolution}, 1) {
  grid_.fill(logit_init);
}

void ProposalField::register_params(ParamRegistry* reg,
                                    const std::string& prefix) {
  grid_.register_params(reg, prefix);
}

double ProposalField::query_alpha(const Eigen::Vector3d& x) const {
  Eigen::VectorXd f(1);
  if (!grid_.query(x, &f)) return 0.0;
  return logistic(f[0]);
}

void ProposalField::accumulate_gradient(const Eigen::Vector3d& x, double alpha,
                                        double dL_dalpha,
                                        GradientTape* tape) const {
  if (alpha <= 0.0) return;  // outside the bounds
  Eigen::VectorXd dL_df(1);
  dL_df[0] = dL_dalpha * alpha * (1.0 - alpha);
  grid_.accumulate_gradient(x, dL_df, tape, nullptr);
}

void interval_bounds(const std::vector<double>& ts, double t_near, double t_far,
                     std::vector<double>* bounds) {
  bounds->clear();
  bounds->reserve(ts.size() + 1);
  bounds->push_back(t_near);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    bounds->push_back(0.5 * (ts[i] + ts[i + 1]));
  }
  bounds->push_back(t_far);
}

void composite_weights(const Eigen::Ref<const Eigen::VectorXd>& alphas,
                       Eigen::VectorXd* weights) {
  weights->resize(alphas.size());
  double trans = 1.0;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    (*weights)[i] = alphas[i] * trans;
    trans *= 1.0 - alphas[i];
  }
}

void composite_weights_backward(const Eigen::Ref<const Eigen::VectorXd>& alphas,
                                const Eigen::Ref<const Eigen::VectorXd>& dL_dw,
                                Eigen::VectorXd* dL_dalpha) {
  const Eigen::Index n = alphas.size();
  dL_dalpha->resize(n);
  // Forward transmittances.
  Eigen::VectorXd trans(n);
  double t = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    trans[i] = t;
    t *= 1.0 - alphas[i];
  }
  // Reverse sweep; g carries the (division-free) chain through later
  // transmittances.
  double g = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    (*dL_dalpha)[i] = dL_dw[i] * trans[i] - trans[i] * g;
    g = dL_dw[i] * alphas[i] + (1.0 - alphas[i]) * g;
  }
}

void resample_from_weights(const std::vector<double>& bounds,
                           const Eigen::Ref<const Eigen::VectorXd>& weights,
                           int n, double uniform_mix, bool jitter, Rng* rng,
                           std::vector<double>* out) {
  const int m = static_cast<int>(weights.size());
  if (static_cast<int>(bounds.size()) != m + 1) {
    throw std::invalid_argument("resample_from_weights: bounds/weights mismatch");
  }
  const double span = bounds.back() - bounds.front();
  if (span <= 0.0) {
    throw std::invalid_argument("resample_from_weights: empty interval");
  }
  const double total = weights.sum();

  // Per-interval mass: learned weights blended with a uniform floor (mass
  // proportional to interval width). Zero learned mass degrades to uniform.
  Eigen::VectorXd mass(m);
  const double mix = total > 1e-12 ? uniform_mix : 1.0;
  for (int i = 0; i < m; ++i) {
    const double width = bounds[i + 1] - bounds[i];
    const double learned = total > 1e-12 ? weights[i] / total : 0.0;
    mass[i] = (1.0 - mix) * learned + mix * width / span;
  }
  // Cumulative distribution over interval ends.
  Eigen::VectorXd cdf(m + 1);
  cdf[0] = 0.0;
  for (int i = 0; i < m; ++i) cdf[i + 1] = cdf[i] + mass[i];
  const double norm = cdf[m];

  out->reserve(out->size() + n);
  int seg = 0;
  for (int s = 0; s < n; ++s) {
    const double frac = jitter ? rng->uniform() : 0.5;
    const double u = (s + frac) / n * norm;
    while (seg + 1 < m && cdf[seg + 1] <= u) ++seg;
    const double seg_mass = cdf[seg + 1] - cdf[seg];
    const double w = seg_mass > 0.0 ? (u - cdf[seg]) / seg_mass : 0.5;
    out->push_back(bounds[seg] + w * (bounds[seg + 1] - bounds[seg]));
  }
}

ProposalSampler::ProposalSampler(const ProposalField* coarse,
                                 const ProposalField* fine, int n_coarse,
                                 int n_fine, bool jitter, double uniform_mix)
    : coarse_(coarse), fine_(fine), n_coarse_(n_coarse), n_fine_(n_fine),
      jitter_(jitter), uniform_mix_(uniform_mix) {
  if (coarse_ == nullptr || fine_ == nullptr) {
    throw std::invalid_argument("ProposalSampler: levels must be non-null");
  }
  if (n_coarse_ < 1 || n_fine_ < 1) {
    throw std::invalid_argument("ProposalSampler: sample counts must be positive");
  }
}

void ProposalSampler::sample(const Eigen::Vector3d& origin,
                             const Eigen::Vector3d& dir, double t_near,
                             double t_far, int n, Rng* rng,
                             std::vector<double>* ts) const {
  sample_with_trace(origin, dir, t_near, t_far, n, rng, ts, nullptr);
}

void ProposalSampler::sample_with_trace(const Eigen::Vector3d& origin,
                                        const Eigen::Vector3d& dir,
                                        double t_near, double t_far, int n,
                                        Rng* rng, std::vector<double>* ts,
                                        ProposalTrace* trace) const {
  if (trace != nullptr) {
    trace->levels.clear();
    trace->levels.resize(2);
  }
  // Level 0: uniform stratified positions, coarse occupancy.
  std::vector<double> ts0;
  {
    const double step = (t_far - t_near) / n_coarse_;
    ts0.reserve(n_coarse_);
    for (int i = 0; i < n_coarse_; ++i) {
      const double frac = jitter_ ? rng->uniform() : 0.5;
      ts0.push_back(t_near + (i + frac) * step);
    }
  }
  std::vector<double> bounds0;
  interval_bounds(ts0, t_near, t_far, &bounds0);
  Eigen::VectorXd alpha0(n_coarse_);
  for (int i = 0; i < n_coarse_; ++i) {
    alpha0[i] = coarse_->query_alpha(origin + ts0[i] * dir);
  }
  Eigen::VectorXd w0;
  composite_weights(alpha0, &w0);

  // Level 1: resample against the coarse weights, fine occupancy.
  std::vector<double> ts1;
  resample_from_weights(bounds0, w0, n_fine_, uniform_mix_, jitter_, rng, &ts1);
  std::vector<double> bounds1;
  interval_bounds(ts1, t_near, t_far, &bounds1);
  Eigen::VectorXd alpha1(n_fine_);
  for (int i = 0; i < n_fine_; ++i) {
    alpha1[i] = fine_->query_alpha(origin + ts1[i] * dir);
  }
  Eigen::VectorXd w1;
  composite_weights(alpha1, &w1);

  // Final draw for the renderer.
  resample_from_weights(bounds1, w1, n, uniform_mix_, jitter_, rng, ts);

  if (trace != nullptr) {
    trace->levels[0] = {std::move(ts0), std::move(bounds0), std::move(alpha0),
                        std::move(w0)};
    trace->levels[1] = {std::move(ts1), std::move(bounds1), std::move(alpha1),
                        std::move(w1)};
  }
}

}  // namespace rdf
