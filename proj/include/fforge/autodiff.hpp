#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fforge/tensor.hpp"

namespace fforge {

/// A trainable weight with its gradient accumulator and Adam moments.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  Tensor<Scalar> adam_m;
  Tensor<Scalar> adam_v;
  std::int64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string n, Shape s)
      : name(std::move(n)), value(s), grad(s), adam_m(s), adam_v(s) {}

  void zero_grad() { grad.set_zero(); }
};

/// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
  [[nodiscard]] bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in forward order and their backward
/// closures run in exact reverse order. Parameters live outside the tape;
/// closures accumulate directly into Parameter::grad.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var self)>;

  /// Leaf holding data that never receives a gradient.
  Var constant(Tensor<Scalar> value) { return push(std::move(value), {}, false); }

  /// Leaf whose gradient is collected (used by gradient checks on inputs).
  Var input(Tensor<Scalar> value) { return push(std::move(value), {}, true); }

  /// Records an op result. `backward` reads grad(self) and accumulates into
  /// the grads of the op's inputs.
  Var record(Tensor<Scalar> value, Backward backward) {
    return push(std::move(value), std::move(backward), true);
  }

  const Tensor<Scalar>& value(Var v) const { return node(v).value; }
  const Shape& shape(Var v) const { return node(v).value.shape; }

  [[nodiscard]] bool has_grad(Var v) const { return node(v).has_grad; }
  [[nodiscard]] bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor<Scalar>& grad(Var v) {
    Node& nd = node(v);
    if (!nd.has_grad) {
      nd.grad = Tensor<Scalar>(nd.value.shape);
      nd.has_grad = true;
    }
    return nd.grad;
  }

  /// Seeds d(root)/d(root) = 1 on a single-element node and runs every
  /// recorded closure that received a gradient, newest first.
  void backward(Var root) {
    if (node(root).value.size() != 1) {
      throw std::invalid_argument("Tape::backward: root must be a scalar");
    }
    grad(root).data.setOnes();
    for (int i = root.id; i >= 0; --i) {
      Node& nd = nodes_[static_cast<std::size_t>(i)];
      if (nd.backward && nd.has_grad) {
        nd.backward(*this, Var{i});
      }
    }
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    bool has_grad = false;
    bool requires_grad = true;
    Backward backward;
  };

  Var push(Tensor<Scalar> value, Backward backward, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, false, requires_grad, std::move(backward)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Node& node(Var v) {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw std::out_of_range("Tape: invalid Var");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw std::out_of_range("Tape: invalid Var");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  std::vector<Node> nodes_;
};

}  // namespace fforge
