#include "propspan/autograd/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace propspan::ag {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tape<T> Tape<T>::record(const Tensor<T>& root) {
  Tape tape;
  if (!root.defined() || !root.requires_grad()) return tape;
  std::unordered_set<const detail::Node<T>*> visited;
  // Iterative post-order DFS; second pair member is the next parent to visit.
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      auto* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      tape.order_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

template <typename T>
void Tape<T>::backward() {
  if (order_.empty()) return;
  for (auto* node : order_) {
    if (node->backward) node->grad.assign(node->value.size(), T{0});
  }
  auto* root = order_.back();
  root->ensure_grad();
  root->grad[0] += T{1};
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  Tape<T>::record(loss).backward();
}

template class Tape<float>;
template class Tape<double>;
template class Tape<long double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template void backward<long double>(const Tensor<long double>&);

}  // namespace propspan::ag
