// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/params.hpp"

#include <stdexcept>

namespace rdf {

std::size_t ParamRegistry::add_block(std::string name, double* data,
                                     std::size_t size) {
  if (!data || size == 0) throw std::invalid_argument("empty parameter block");
  Block b;
  b.name = std::move(name);
  b.data = data;
  b.size = size;
  b.offset = total_;
  blocks_.push_back(std::move(b));
  total_ += size;
  return blocks_.size() - 1;
}

namespace {

const ParamRegistry::Block& find_block(const std::vector<ParamRegistry::Block>& blocks,
                                       std::size_t flat_index) {
  for (const auto& b : blocks) {
    if (flat_index >= b.offset && flat_index < b.offset + b.size) return b;
  }
  throw std::out_of_range("flat parameter index outside registry");
}

}  // namespace

double* ParamRegistry::param_ptr(std::size_t flat_index) const {
  const Block& b = find_block(blocks_, flat_index);
  return b.data + (flat_index - b.offset);
}

const std::string& ParamRegistry::block_name_of(std::size_t flat_index) const {
  return find_block(blocks_, flat_index).name;
}

Eigen::VectorXd ParamRegistry::gather() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(total_));
  for (const auto& b : blocks_) {
    for (std::size_t i = 0; i < b.size; ++i) {
      flat[static_cast<Eigen::Index>(b.offset + i)] = b.data[i];
    }
  }
  return flat;
}

void ParamRegistry::scatter(const Eigen::VectorXd& flat) const {
  if (flat.size() != static_cast<Eigen::Index>(total_)) {
    throw std::invalid_argument("flat vector length does not match registry");
  }
  for (const auto& b : blocks_) {
    for (std::size_t i = 0; i < b.size; ++i) {
      b.data[i] = flat[static_cast<Eigen::Index>(b.offset + i)];
    }
  }
}

GradientTape::GradientTape(const ParamRegistry& registry)
    : registry_(&registry),
      grad_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(registry.total_size()))) {}

void GradientTape::reset() {
  grad_.setZero();
  loss_ = 0.0;
  consumed_ = false;
}

double* GradientTape::block_grad(std::size_t block_id) {
  const auto& b = registry_->block(block_id);
  return grad_.data() + b.offset;
}

void GradientTape::add(const GradientTape& other) {
  if (other.grad_.size() != grad_.size()) {
    throw std::invalid_argument("tape size mismatch in reduction");
  }
  grad_ += other.grad_;
}

void GradientTape::finalize(double loss) {
  if (consumed_) {
    throw std::logic_error("gradient tape finalized twice without reset");
  }
  loss_ = loss;
  consumed_ = true;
}

double GradientTape::loss() const {
  if (!consumed_) throw std::logic_error("gradient tape has no finalized loss");
  return loss_;
}

}  // namespace rdf
