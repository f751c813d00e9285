// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clover/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "clover/error.hpp"

namespace clover {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  }
  return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), values_);
}

void Tensor::zero_grad() { grad_.assign(values_.size(), 0.0); }

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size()) {
    throw ShapeError("index of rank " + std::to_string(idx.size()) +
                     " into tensor " + shape_string(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : idx) {
    if (i >= shape_[axis]) {
      throw ShapeError("index " + std::to_string(i) + " out of range on axis " +
                       std::to_string(axis) + " of " + shape_string(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

const Tensor& Var::value() const { return tape_->value(id_); }

std::span<const double> Var::grad() const { return tape_->grad(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::watch(Tensor& param) {
  nodes_.push_back(Node{param, {}, {}, &param, true});
  nodes_.back().value.clear_grad();
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape_ != this) throw ShapeError("op mixes variables from different tapes");
    needs = needs || nodes_[p.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, needs});
  if (needs) nodes_.back().backward = std::move(backward);
  return Var(this, nodes_.size() - 1);
}

std::span<double> Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw ShapeError("loss belongs to a different tape");
  if (nodes_[loss.id_].value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     shape_string(nodes_[loss.id_].value.shape()));
  }
  for (Node& node : nodes_) {
    node.grad.clear();
    if (node.source != nullptr && !node.source->has_grad()) node.source->zero_grad();
  }
  if (!nodes_[loss.id_].requires_grad) return;
  grad_buffer(loss.id_)[0] = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(node.grad);
    if (node.source != nullptr) {
      Tensor& param = *node.source;
      if (!param.has_grad()) param.zero_grad();
      auto g = param.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
  }
}

}  // namespace clover
