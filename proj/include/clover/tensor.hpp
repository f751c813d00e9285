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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace clover {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// A Tensor is plain data. Parameters set `requires_grad` and receive their
/// gradient in `grad()` when a Tape they were watched on runs backward.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Row-major multi-index access; the index count must equal rank().
  template <typename... Idx>
  double& at(Idx... idx) {
    return values_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double at(Idx... idx) const {
    return values_[offset({static_cast<std::size_t>(idx)...})];
  }

  // Value of a single-element tensor.
  double item() const;

  // Same values, new shape of identical element count.
  Tensor reshaped(Shape shape) const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return !grad_.empty(); }
  std::span<const double> grad() const { return grad_; }
  std::span<double> grad() { return grad_; }
  void zero_grad();
  void clear_grad() { grad_.clear(); }

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  Shape shape_{0};
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::vector<double> grad_;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }

  // Gradient accumulated by the last backward pass (empty if none reached).
  std::span<const double> grad() const;
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape.
///
/// Nodes are appended in evaluation order, so every parent precedes its
/// children. backward() walks the nodes once in reverse recording order.
/// A tape and its Vars are confined to one thread.
class Tape {
 public:
  // Receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(std::span<const double> upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);

  // Leaf bound to a parameter; backward() adds the leaf gradient into
  // param.grad() (allocating it if needed).
  Var watch(Tensor& param);

  // Records an op output. `backward` may be empty when no parent requires a
  // gradient.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  void backward(const Var& loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::span<const double> grad(std::size_t id) const { return nodes_[id].grad; }

  // Gradient accumulator of a node, allocated on first use. Only meaningful
  // for nodes that require a gradient.
  std::span<double> grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    BackwardFn backward;
    Tensor* source = nullptr;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

}  // namespace clover
