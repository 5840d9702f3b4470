// Copyright 2026 The madsep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "madsep/tensor.hpp"

namespace madsep {

using NodeId = std::size_t;

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; the tape owns the
/// data and must outlive every Var that refers to it.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, NodeId id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape<T>& tape() const { return *tape_; }
  NodeId id() const { return id_; }

  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  const Tensor<T>& grad() const { return tape_->grad(id_); }

 private:
  Tape<T>* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Linear record of forward operations. Nodes are appended in execution
/// order, so the record is topologically sorted by construction and the
/// reverse sweep visits each op exactly once.
template <typename T>
class Tape {
 public:
  /// Receives the gradient flowing into an op's output and pushes
  /// contributions to its inputs through accumulate().
  using Backward = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    check_finite("leaf", value);
    nodes_.push_back(Node{"leaf", std::move(value), {}, requires_grad, {}, {}});
    return Var<T>(this, nodes_.size() - 1);
  }

  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Appends an op result. The backward rule is kept only when some input
  /// participates in differentiation.
  Var<T> record(std::string_view op, Tensor<T> value,
                std::vector<NodeId> inputs, Backward backward) {
    check_finite(op, value);
    bool needs = false;
    for (NodeId in : inputs) needs = needs || nodes_.at(in).requires_grad;
    Node node{std::string(op), std::move(value), std::move(inputs), needs, {}, {}};
    if (needs) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<T>(this, nodes_.size() - 1);
  }

  const Tensor<T>& value(NodeId id) const { return nodes_.at(id).value; }
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  std::string_view op_name(NodeId id) const { return nodes_.at(id).op; }
  const std::vector<NodeId>& inputs(NodeId id) const {
    return nodes_.at(id).inputs;
  }
  std::size_t size() const { return nodes_.size(); }

  void accumulate(NodeId id, const Tensor<T>& g) {
    Node& node = nodes_.at(id);
    if (!node.requires_grad) return;
    if (g.shape() != node.value.shape()) {
      throw ShapeError("gradient shape " + shape_str(g.shape()) +
                       " does not match value shape " +
                       shape_str(node.value.shape()) + " at node '" + node.op +
                       "'");
    }
    if (!node.grad) {
      node.grad = g;
      return;
    }
    auto dst = node.grad->data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  /// Reverse sweep from a scalar loss. Gradients from any earlier sweep are
  /// discarded first. Leaves not connected to the loss get zero gradients.
  void backward(const Var<T>& loss) {
    if (loss.value().size() != 1) {
      throw ShapeError("backward: loss must be scalar, got shape " +
                       shape_str(loss.shape()));
    }
    for (Node& n : nodes_) n.grad.reset();
    if (!nodes_.at(loss.id()).requires_grad) {
      materialize_leaf_grads();
      return;
    }
    nodes_[loss.id()].grad = Tensor<T>(loss.shape(), T{1});
    for (NodeId i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.grad || !node.backward) continue;
      node.backward(*this, *node.grad);
    }
    materialize_leaf_grads();
  }

  const Tensor<T>& grad(NodeId id) const {
    const Node& node = nodes_.at(id);
    if (!node.grad) node.grad = Tensor<T>::zeros(node.value.shape());
    return *node.grad;
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::string op;
    Tensor<T> value;
    std::vector<NodeId> inputs;
    bool requires_grad = false;
    Backward backward;
    mutable std::optional<Tensor<T>> grad;
  };

  static void check_finite(std::string_view op, const Tensor<T>& value) {
    if (!value.all_finite()) {
      throw NumericError("op '" + std::string(op) +
                         "' produced non-finite values (shape " +
                         shape_str(value.shape()) + ")");
    }
  }

  void materialize_leaf_grads() {
    for (Node& n : nodes_) {
      if (n.requires_grad && n.inputs.empty() && !n.grad) {
        n.grad = Tensor<T>::zeros(n.value.shape());
      }
    }
  }

  // deque: references returned by value() stay valid as the tape grows.
  std::deque<Node> nodes_;
};

}  // namespace madsep
