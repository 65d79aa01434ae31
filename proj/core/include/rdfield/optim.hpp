// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rdfield/params.hpp"

namespace rdf {

struct OptimConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool use_sgd = false;  // plain gradient steps instead of Adam
};

/// First-order optimizer over a ParamRegistry with per-block learning rates.
/// Blocks whose resolved rate is zero are frozen (their moment state is not
/// advanced either, so unfreezing later resumes cleanly). Rates may be
/// rescheduled between steps; moment state persists.
class Optimizer {
 public:
  Optimizer(const ParamRegistry* registry, OptimConfig config = {});

  /// Default rate for blocks without a more specific rule.
  void set_default_lr(double lr) { default_lr_ = lr; }

  /// Rate for every block whose name equals `key` or starts with `key` + "/".
  /// Later rules override earlier ones.
  void set_block_lr(const std::string& key, double lr);

  /// Global multiplier applied on top of the per-block rates (schedules).
  void set_lr_scale(double s) { lr_scale_ = s; }
  double lr_scale() const { return lr_scale_; }

  /// Applies one update from an accumulated (finalized or not) tape.
  void step(const GradientTape& tape);

  std::size_t step_count() const { return t_; }
  double resolved_lr(std::size_t block_id) const;

 private:
  const ParamRegistry* registry_;
  OptimConfig config_;
  double default_lr_ = 0.0;
  double lr_scale_ = 1.0;
  std::vector<std::pair<std::string, double>> rules_;
  Eigen::VectorXd m_, v_;
  std::size_t t_ = 0;
};

/// Exponential interpolation lr0 -> lr1 over `total` steps, clamped at the
/// ends; the standard schedule shape for both field and pose groups.
double exponential_lr(double lr0, double lr1, std::size_t step, std::size_t total);

}  // namespace rdf
