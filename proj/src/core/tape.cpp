// SPDX-License-Identifier: Apache-2.0
#include "fden/core/tape.hpp"

#include <utility>

namespace fden::ad {

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}

void Parameter::zero_grad() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad.resize(value.rows(), value.cols());
  }
  grad.setZero();
}

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.borrowed = &value;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.keep_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
  Node n;
  n.borrowed = &p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
  require_finite(value, "forward pass");
  Node n;
  n.value = std::move(value);
  for (auto p : parents) {
    if (nodes_[p].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) {
    n.parents = std::move(parents);
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return value(v.id); }

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.borrowed ? *n.borrowed : n.value;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.param != nullptr) return n.param->grad;
  if (n.has_grad) return n.grad;
  const Tensor& val = value(v.id);
  return Tensor::Zero(val.rows(), val.cols());
}

Tensor* Tape::param_grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param == nullptr) return nullptr;
  n.has_grad = true;
  return &n.param->grad;
}

void Tape::accumulate(std::size_t id, Tensor g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.param != nullptr) {
    // Parameter leaves add straight into the parameter's buffer.
    require_same_shape(n.param->grad, g, "parameter gradient");
    n.param->grad += g;
    n.has_grad = true;
    return;
  }
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = std::move(g);
    n.has_grad = true;
  }
}

void Tape::backward(Var root, double seed, bool retain) {
  const Tensor& v = value(root.id);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("backward from non-scalar root " + shape_str(v) +
                     " needs an explicit upstream gradient");
  }
  backward(root, Tensor::Constant(1, 1, seed), retain);
}

void Tape::backward(Var root, const Tensor& upstream, bool retain) {
  if (consumed_) throw std::logic_error("trace already consumed by a previous backward pass");
  require_same_shape(value(root.id), upstream, "backward seed");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root.id, upstream);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || n.param != nullptr) continue;
    require_finite(n.grad, "backward pass");
    if (n.backward) {
      // The closure may grow nodes_' elements' grads but never reallocates nodes_.
      n.backward(*this, n.grad);
    }
  }
  if (!retain) {
    consumed_ = true;
    for (auto& n : nodes_) n.backward = nullptr;
  }
}

}  // namespace fden::ad
