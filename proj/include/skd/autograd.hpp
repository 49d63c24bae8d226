#pragma once

#include "skd/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace skd {

/// One value in a reverse-mode graph. Parameters are long-lived leaf nodes;
/// intermediate nodes die with the last Var that references them.
template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Lazily allocated gradient buffer matching `value`.
  Tensor<Scalar>& grad_buffer();
  void zero_grad() { grad = Tensor<Scalar>(); }
  bool has_grad() const { return !grad.empty(); }
};

template <typename Scalar>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<Scalar> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor<Scalar>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Tensor<Scalar>& grad() const { return node_->grad; }
  const std::shared_ptr<Node<Scalar>>& node() const { return node_; }

  // Same value, cut from the graph.
  Var detach() const { return Var(node_->value, false); }

 private:
  std::shared_ptr<Node<Scalar>> node_;
};

using Varf = Var<float>;
using Vard = Var<double>;

/// Seeds d(root)/d(root) = 1 and propagates into every reachable node that
/// requires a gradient. `root` must hold a single element.
template <typename Scalar>
void backward(const Var<Scalar>& root);

/// Builds a result node. When gradient recording is off or no input needs a
/// gradient the result is a plain leaf and `fn` is dropped.
template <typename Scalar>
Var<Scalar> make_result(Tensor<Scalar> value, std::vector<Var<Scalar>> inputs,
                        std::function<void(Node<Scalar>&)> fn);

bool grad_enabled();

// Disables graph construction on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace skd
