// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fden/core/tensor.hpp"

namespace fden::ad {

/// A trainable array with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v);
  void zero_grad();
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode trace of a forward computation.
///
/// Every op appends a node holding its output and a closure that maps the
/// node's upstream gradient onto its parents. `backward` walks the nodes in
/// reverse order. Parameter leaves add their gradient into Parameter::grad,
/// so several backward passes over a retained trace accumulate.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf that borrows `value`, which must outlive the tape. No gradient.
  Var constant_ref(const Tensor& value);
  /// Leaf whose gradient is kept and readable through grad().
  Var input(Tensor value);
  /// Leaf bound to a parameter; it borrows the value, which must outlive the tape.
  Var param(Parameter& p);

  /// Records an op. `parents` lists the node ids the closure may accumulate into.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);

  const Tensor& value(Var v) const;
  const Tensor& value(std::size_t id) const;
  /// Gradient of the last backward root with respect to `v`. Zero-shaped tensor
  /// of the right size when no gradient reached the node. Parameter leaves
  /// report the parameter's accumulated gradient.
  Tensor grad(Var v) const;

  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adds `g` into the gradient buffer of node `id` (no-op for constants).
  void accumulate(std::size_t id, Tensor g);
  /// The bound parameter's gradient buffer when `id` is a parameter leaf, else
  /// null. Ops may add into it directly; doing so marks the leaf as reached.
  Tensor* param_grad(std::size_t id);

  /// Runs the reverse pass from a scalar root seeded with `seed`.
  void backward(Var root, double seed = 1.0, bool retain = false);
  /// Runs the reverse pass with an arbitrary upstream gradient shaped like root.
  void backward(Var root, const Tensor& upstream, bool retain = false);

  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    Parameter* param = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool keep_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace fden::ad
