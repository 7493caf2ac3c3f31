#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "cde/autograd/tensor.hpp"

namespace cde::ag {

template <class T>
class Tape;

template <class T>
struct Node {
  Tensor<T> own;
  /// Parameters are referenced, not copied.
  const Tensor<T>* ref = nullptr;
  Tensor<T> grad;
  /// Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;
  Param<T>* param = nullptr;
  bool requires_grad = false;

  const Tensor<T>& value() const { return ref != nullptr ? *ref : own; }

  Tensor<T>& ensure_grad() {
    const auto& v = value();
    if (!grad.same_shape(v)) grad = Tensor<T>(v.rows(), v.cols());
    return grad;
  }
};

/// Handle to a value produced on a tape.
template <class T>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<T>> node, Tape<T>* tape)
      : node_(std::move(node)), tape_(tape) {}

  const Tensor<T>& value() const { return node_->value(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient after backward; empty when nothing flowed here.
  const Tensor<T>& grad() const { return node_->grad; }

  Tape<T>& tape() const { return *tape_; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node<T>> node_;
  Tape<T>* tape_ = nullptr;
};

/// Records differentiable operations in creation order, which is a
/// topological order of the graph. A non-recording tape computes values
/// only; intermediates are freed as soon as no handle refers to them.
template <class T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return records_.size(); }

  Var<T> constant(Tensor<T> v) {
    auto n = std::make_shared<Node<T>>();
    n->own = std::move(v);
    return {std::move(n), this};
  }

  /// Non-owning constant; `v` must outlive every use of the handle.
  Var<T> view(const Tensor<T>& v) {
    auto n = std::make_shared<Node<T>>();
    n->ref = &v;
    return {std::move(n), this};
  }

  /// Leaf whose gradient is kept on the node (read it via Var::grad()).
  Var<T> input(Tensor<T> v) {
    auto n = std::make_shared<Node<T>>();
    n->own = std::move(v);
    n->requires_grad = recording_;
    if (recording_) records_.push_back(n);
    return {std::move(n), this};
  }

  /// Leaf bound to a parameter; backward accumulates into p.grad.
  Var<T> param(Param<T>& p) {
    auto n = std::make_shared<Node<T>>();
    n->ref = &p.value;
    n->requires_grad = recording_;
    if (recording_) {
      n->param = &p;
      records_.push_back(n);
    }
    return {std::move(n), this};
  }

  /// Used by primitives. `bw` is stored only when recording and some
  /// parent requires grad.
  Var<T> make(Tensor<T> value, bool parents_require_grad,
              std::function<void(Node<T>&)> bw) {
    auto n = std::make_shared<Node<T>>();
    n->own = std::move(value);
    if (recording_ && parents_require_grad) {
      n->requires_grad = true;
      n->backward = std::move(bw);
      records_.push_back(n);
    }
    return {std::move(n), this};
  }

  /// Backpropagates from a 1x1 loss.
  void backward(const Var<T>& loss) {
    if (loss.value().size() != 1) {
      throw ShapeError("backward: loss must be scalar, got " +
                       loss.value().shape_str());
    }
    Tensor<T> seed(1, 1, T(1));
    std::pair<Var<T>, Tensor<T>> s{loss, std::move(seed)};
    backward_from(std::span(&s, 1));
  }

  /// Backpropagates from arbitrary outputs seeded with the given grads.
  void backward_from(std::span<const std::pair<Var<T>, Tensor<T>>> seeds) {
    for (const auto& [var, g] : seeds) {
      if (&var.tape() != this) throw Error("backward: seed from another tape");
      if (!g.same_shape(var.value())) {
        throw ShapeError("backward: seed grad " + g.shape_str() +
                         " does not match output " + var.value().shape_str());
      }
      if (!var.requires_grad()) continue;
      auto& dst = var.node()->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dst.data()[i] += g.data()[i];
    }
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(n);
      if (n.param != nullptr) {
        n.param->ensure_grad();
        auto& pg = n.param->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) pg.data()[i] += n.grad.data()[i];
      }
    }
  }

  /// Drops every record; values held by live Var handles survive.
  void clear() { records_.clear(); }

 private:
  bool recording_;
  std::vector<std::shared_ptr<Node<T>>> records_;
};

}  // namespace cde::ag
