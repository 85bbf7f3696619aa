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

#include "dbsgen/tensor/graph.hpp"

namespace dbsgen {

namespace {

// An empty Tensor has shape () just like a scalar, so compare sizes too.
bool allocated_for(const Tensor& grad, const Tensor& value) {
  return grad.size() == value.size() && grad.shape() == value.shape();
}

}  // namespace

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::append(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::check_owned(Var v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw ArgumentError("variable does not belong to this graph");
  }
}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.leaf = true;
  return append(std::move(node));
}

Var Graph::variable(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.leaf = true;
  node.requires_grad = true;
  return append(std::move(node));
}

Var Graph::parameter(Parameter& param) {
  Node node;
  node.value = param.value;
  node.leaf = true;
  node.requires_grad = true;
  node.param = &param;
  return append(std::move(node));
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (Var in : inputs) {
    check_owned(in);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return append(std::move(node));
}

const Tensor& Graph::value(Var v) const {
  check_owned(v);
  return nodes_[v.id_].value;
}

bool Graph::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id_].requires_grad;
}

Tensor* Graph::grad_sink(Var v) {
  check_owned(v);
  Node& node = nodes_[v.id_];
  if (!node.requires_grad) return nullptr;
  if (!allocated_for(node.grad, node.value)) node.grad = Tensor::zeros_like(node.value);
  return &node.grad;
}

const Tensor& Graph::grad(Var v) {
  check_owned(v);
  Node& node = nodes_[v.id_];
  if (!allocated_for(node.grad, node.value)) node.grad = Tensor::zeros_like(node.value);
  return node.grad;
}

void Graph::backward(Var loss) {
  check_owned(loss);
  if (nodes_[loss.id_].value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(nodes_[loss.id_].value.shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor();
  Node& root = nodes_[loss.id_];
  if (!root.requires_grad) return;
  root.grad = Tensor(root.value.shape(), 1.0);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.leaf || !node.backward || node.grad.empty()) continue;
    node.backward(*this, node.grad);
  }
  have_gradients_ = true;
  if (deposit_ == Deposit::immediate) deposit_gradients();
}

void Graph::deposit_gradients() {
  if (!have_gradients_) return;
  for (Node& node : nodes_) {
    if (!node.param || node.grad.empty()) continue;
    if (!allocated_for(node.param->grad, node.param->value)) node.param->grad = Tensor::zeros_like(node.param->value);
    node.param->grad += node.grad;
  }
  have_gradients_ = false;
}

}  // namespace dbsgen
