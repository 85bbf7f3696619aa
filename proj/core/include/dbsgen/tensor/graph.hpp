// Copyright 2026 The DBSGen Authors. All Rights Reserved.
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
#include <functional>
#include <string>
#include <deque>
#include <vector>

#include "dbsgen/tensor/tensor.hpp"

namespace dbsgen {

/// A named optimizable array together with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value, bool decay = true)
      : name(std::move(name)), value(std::move(value)), grad(Tensor::zeros_like(this->value)), decay(decay) {}

  std::string name;
  Tensor value;
  Tensor grad;
  // Included in the L2 weight penalty.
  bool decay = true;

  void zero_grad() {
    if (grad.size() == value.size() && grad.shape() == value.shape()) {
      grad.fill(0.0);
    } else {
      grad = Tensor::zeros_like(value);
    }
  }
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape.
///
/// Nodes are appended in evaluation order, so creation order is a valid
/// topological order and the graph is acyclic by construction. Leaves are
/// constants, free variables or references to external Parameters.
///
/// backward() recomputes every interior gradient from scratch and then adds
/// the leaf gradients into the bound Parameters (immediate mode), so calling
/// it twice accumulates twice. In deferred mode the deposit is left to an
/// explicit deposit_gradients() call, which lets independent per-frame graphs
/// run their backward passes concurrently and reduce in a fixed order.
class Graph {
 public:
  enum class Deposit { immediate, deferred };

  /// Accumulates the incoming output gradient into the inputs' gradients.
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  explicit Graph(Deposit deposit = Deposit::immediate) : deposit_(deposit) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var parameter(Parameter& param);

  /// Appends an interior node. `backward` is dropped if no input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient buffer of `v` for use inside BackwardFn; nullptr when `v`
  /// does not require a gradient.
  Tensor* grad_sink(Var v);

  /// Gradient computed for `v` by the last backward() call.
  const Tensor& grad(Var v);

  /// Runs the reverse sweep from a scalar loss.
  void backward(Var loss);

  /// Adds leaf gradients into their bound Parameters (deferred mode).
  void deposit_gradients();

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool leaf = false;
  };

  Var append(Node node);
  void check_owned(Var v) const;

  // deque keeps node references stable while the tape grows.
  std::deque<Node> nodes_;
  Deposit deposit_;
  bool have_gradients_ = false;
};

}  // namespace dbsgen
