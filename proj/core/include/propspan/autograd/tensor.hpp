#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "propspan/error.hpp"

namespace propspan::ag {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Whether new operations record their backward function. Thread-local.
bool grad_enabled();

/// Disables graph recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads this node's grad and accumulates into the parents. Empty for leaves.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
  }
};

}  // namespace detail

/// Dense row-major tensor with shared ownership of its graph node.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<T> values) {
    if (values.size() != shape_size(shape)) {
      throw ContractError("tensor: " + std::to_string(values.size()) + " values for shape " +
                          shape_string(shape));
    }
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
  }
  static Tensor zeros(Shape shape) {
    const auto n = shape_size(shape);
    return constant(std::move(shape), std::vector<T>(n, T{0}));
  }
  static Tensor parameter(Shape shape, std::vector<T> values) {
    auto t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
  }
  static Tensor scalar(T value) { return constant({1}, {value}); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  /// Direct write access for optimizers and finite-difference probes.
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), T{0}); }

  T item() const {
    if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
  }
  T at(std::size_t row, std::size_t col) const { return node_->value[row * node_->shape.back() + col]; }

  /// A new leaf holding a copy of the values, detached from any graph.
  Tensor detach() const { return constant(shape(), node_->value); }

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Reachable graph in topological order (inputs before outputs); each node once.
template <typename T>
class Tape {
 public:
  static Tape record(const Tensor<T>& root);
  std::size_t size() const { return order_.size(); }
  /// Zeroes interior grads, seeds the root with 1 and runs every backward
  /// function from the root down. Leaf grads accumulate across calls.
  void backward();

 private:
  std::vector<detail::Node<T>*> order_;
};

/// Fills grads of every requires_grad tensor reachable from the scalar `loss`.
/// Leaf gradients accumulate when called repeatedly without zeroing.
template <typename T>
void backward(const Tensor<T>& loss);

/// Creates an op result. When recording is enabled and any input requires a
/// gradient, the result keeps the inputs and `fn` as its backward step.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs, std::function<void(detail::Node<T>&)> fn) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (grad_enabled()) {
    bool any = false;
    for (const auto& input : inputs) any = any || input.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const auto& input : inputs) node->parents.push_back(input.node());
      node->backward = std::move(fn);
    }
  }
  return Tensor<T>(std::move(node));
}

/// Gradient buffer of `t` when it participates in backprop, else an empty span.
template <typename T>
std::span<T> grad_sink(const Tensor<T>& t) {
  auto& node = *t.node();
  if (!node.requires_grad) return {};
  node.ensure_grad();
  return node.grad;
}

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Tape<long double>;

extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);
extern template void backward<long double>(const Tensor<long double>&);

}  // namespace propspan::ag
