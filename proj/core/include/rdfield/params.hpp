// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace rdf {

/// Registry of learnable parameter blocks. Structures own their storage and
/// register spans here; the registry assigns each block a stable offset into
/// the flat parameter/gradient vectors used by the tape and the optimizer.
/// Registration order is part of the model contract (checkpoints and
/// optimizer state are aligned to it), so callers register blocks in a fixed
/// documented order.
class ParamRegistry {
 public:
  struct Block {
    std::string name;
    double* data = nullptr;
    std::size_t size = 0;
    std::size_t offset = 0;
  };

  /// Registers `size` doubles at `data`; returns the block id.
  std::size_t add_block(std::string name, double* data, std::size_t size);

  std::size_t n_blocks() const { return blocks_.size(); }
  const Block& block(std::size_t id) const { return blocks_.at(id); }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t total_size() const { return total_; }

  /// Pointer to the flat-index-th scalar inside its owning structure.
  double* param_ptr(std::size_t flat_index) const;
  /// Name of the block containing a flat index (for diagnostics).
  const std::string& block_name_of(std::size_t flat_index) const;

  /// Copies all registered parameters into / out of one flat vector.
  Eigen::VectorXd gather() const;
  void scatter(const Eigen::VectorXd& flat) const;

 private:
  std::vector<Block> blocks_;
  std::size_t total_ = 0;
};

/// Flat gradient accumulator aligned with a ParamRegistry. A tape is armed on
/// construction or reset(); finalize() stores the loss and marks the tape
/// consumed. Finalizing a consumed tape throws, which catches accidental
/// accumulation across iterations without an intervening reset.
class GradientTape {
 public:
  explicit GradientTape(const ParamRegistry& registry);

  std::size_t size() const { return static_cast<std::size_t>(grad_.size()); }
  void reset();

  /// Raw span of the gradient entries for one registered block.
  double* block_grad(std::size_t block_id);
  /// Adds into a single flat entry.
  void accumulate(std::size_t flat_index, double value) { grad_[flat_index] += value; }

  /// Merges another tape's accumulated gradients (per-worker reduction).
  void add(const GradientTape& other);

  /// Stores the loss and marks the tape consumed.
  void finalize(double loss);
  bool consumed() const { return consumed_; }
  double loss() const;

  const Eigen::VectorXd& grad() const { return grad_; }
  Eigen::VectorXd& grad() { return grad_; }

 private:
  const ParamRegistry* registry_;
  Eigen::VectorXd grad_;
  double loss_ = 0.0;
  bool consumed_ = false;
};

}  // namespace rdf
