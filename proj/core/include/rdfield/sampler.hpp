// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rdfield/grid.hpp"
#include "rdfield/params.hpp"
#include "rdfield/renderer.hpp"
#include "rdfield/rng.hpp"

namespace rdf {

/// One occupancy level used to steer sampling: a single dense grid squashed
/// through a logistic. Cheap to evaluate and trained online against the main
/// field's rendering weights.
class ProposalField {
 public:
  ProposalField(const Eigen::AlignedBox3d& bounds, int resolution,
                double logit_init = -3.0);

  void register_params(ParamRegistry* reg, const std::string& prefix);

  /// Occupancy in [0,1); exactly 0 outside the bounds.
  double query_alpha(const Eigen::Vector3d& x) const;
  void accumulate_gradient(const Eigen::Vector3d& x, double alpha,
                           double dL_dalpha, GradientTape* tape) const;

  MultiResGrid& grid() { return grid_; }
  const MultiResGrid& grid() const { return grid_; }

 private:
  MultiResGrid grid_;
};

/// Interval boundaries for a sorted sample set: midpoints between neighbors,
/// capped by [t_near, t_far]. n samples produce n+1 boundaries.
void interval_bounds(const std::vector<double>& ts, double t_near, double t_far,
                     std::vector<double>* bounds);

/// Unsquared rendering weights w_i = alpha_i * prod_{j<i} (1 - alpha_j),
/// the form shared by camera compositing and proposal supervision.
void composite_weights(const Eigen::Ref<const Eigen::VectorXd>& alphas,
                       Eigen::VectorXd* weights);

/// Backward of composite_weights (division-free reverse sweep).
void composite_weights_backward(const Eigen::Ref<const Eigen::VectorXd>& alphas,
                                const Eigen::Ref<const Eigen::VectorXd>& dL_dw,
                                Eigen::VectorXd* dL_dalpha);

/// Stratified inverse-CDF draw of n points from the piecewise-constant
/// density with interval `bounds` (size m+1) and non-negative `weights`
/// (size m). A fraction `uniform_mix` of the mass is spread uniformly so no
/// interval starves; if the weights sum to (near) zero the draw degrades to
/// purely uniform. Output is sorted. With `jitter` false the strata are
/// sampled at their centers (deterministic given the inputs).
void resample_from_weights(const std::vector<double>& bounds,
                           const Eigen::Ref<const Eigen::VectorXd>& weights,
                           int n, double uniform_mix, bool jitter, Rng* rng,
                           std::vector<double>* out);

/// Record of the per-level proposal evaluations behind one ray's samples,
/// kept so the interlevel supervision can be computed and differentiated.
struct ProposalTrace {
  struct Level {
    std::vector<double> ts;      // sample positions this level evaluated
    std::vector<double> bounds;  // interval boundaries (ts.size() + 1)
    Eigen::VectorXd alpha;       // proposal occupancy at ts
    Eigen::VectorXd weight;      // composite_weights(alpha)
  };
  std::vector<Level> levels;  // coarse first
};

/// Two-level hierarchical sampler: uniform stratified -> coarse proposal
/// resample -> fine proposal resample. Deterministic per RNG stream.
class ProposalSampler : public RaySampler {
 public:
  ProposalSampler(const ProposalField* coarse, const ProposalField* fine,
                  int n_coarse, int n_fine, bool jitter = true,
                  double uniform_mix = 0.05);

  void sample(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
              double t_near, double t_far, int n, Rng* rng,
              std::vector<double>* ts) const override;

  /// Same draw, additionally filling `trace` with the per-level state.
  void sample_with_trace(const Eigen::Vector3d& origin,
                         const Eigen::Vector3d& dir, double t_near,
                         double t_far, int n, Rng* rng, std::vector<double>* ts,
                         ProposalTrace* trace) const;

  const ProposalField* coarse() const { return coarse_; }
  const ProposalField* fine() const { return fine_; }

 private:
  const ProposalField* coarse_;
  const ProposalField* fine_;
  int n_coarse_;
  int n_fine_;
  bool jitter_;
  double uniform_mix_;
};

}  // namespace rdf
