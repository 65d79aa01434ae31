// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rdf {

Optimizer::Optimizer(const ParamRegistry* registry, OptimConfig config)
    : registry_(registry), config_(config) {
  if (registry_ == nullptr) {
    throw std::invalid_argument("Optimizer: registry must be non-null");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(registry_->total_size());
  m_ = Eigen::VectorXd::Zero(n);
  v_ = Eigen::VectorXd::Zero(n);
}

void Optimizer::set_block_lr(const std::string& key, double lr) {
  rules_.emplace_back(key, lr);
}

double Optimizer::resolved_lr(std::size_t block_id) const {
  const std::string& name = registry_->block(block_id).name;
  double lr = default_lr_;
  for (const auto& [key, rule_lr] : rules_) {
    if (name == key ||
        (name.size() > key.size() && name.compare(0, key.size(), key) == 0 &&
         name[key.size()] == '/')) {
      lr = rule_lr;
    }
  }
  return lr;
}

void Optimizer::step(const GradientTape& tape) {
  if (tape.size() != static_cast<std::size_t>(m_.size())) {
    throw std::invalid_argument("Optimizer: tape/registry size mismatch");
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const Eigen::VectorXd& g = tape.grad();
  for (std::size_t bid = 0; bid < registry_->n_blocks(); ++bid) {
    const ParamRegistry::Block& block = registry_->block(bid);
    const double lr = resolved_lr(bid) * lr_scale_;
    if (lr == 0.0) continue;
    for (std::size_t i = 0; i < block.size; ++i) {
      const Eigen::Index f = static_cast<Eigen::Index>(block.offset + i);
      if (config_.use_sgd) {
        block.data[i] -= lr * g[f];
        continue;
      }
      m_[f] = config_.beta1 * m_[f] + (1.0 - config_.beta1) * g[f];
      v_[f] = config_.beta2 * v_[f] + (1.0 - config_.beta2) * g[f] * g[f];
      const double m_hat = m_[f] / bias1;
      const double v_hat = v_[f] / bias2;
      block.data[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

double exponential_lr(double lr0, double lr1, std::size_t step,
                      std::size_t total) {
  if (total == 0) return lr1;
  const double f = std::min(1.0, static_cast<double>(step) /
                                     static_cast<double>(total));
  return lr0 * std::pow(lr1 / lr0, f);
}

}  // namespace rdf
