#include "propspan/autograd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace propspan::ag {

namespace {

template <typename T>
void check_classification(const Tensor<T>& logits, std::span<const int> gold, const char* op) {
  if (!logits.defined() || logits.rank() != 2 || logits.dim(0) == 0 || logits.dim(0) != gold.size()) {
    throw ContractError(std::string(op) + ": logits " +
                        (logits.defined() ? shape_string(logits.shape()) : "undefined") + " for " +
                        std::to_string(gold.size()) + " gold labels");
  }
  const auto classes = static_cast<int>(logits.dim(1));
  for (int g : gold) {
    if (g < 0 || g >= classes) {
      throw ContractError(std::string(op) + ": gold label " + std::to_string(g) + " outside " +
                          std::to_string(classes) + " classes");
    }
  }
}

/// Row-wise log-softmax.
template <typename T>
std::vector<T> log_softmax_rows(std::span<const T> x, std::size_t rows, std::size_t cols) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < rows; ++i) {
    T hi = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < cols; ++k) hi = std::max(hi, x[i * cols + k]);
    T total{0};
    for (std::size_t k = 0; k < cols; ++k) total += std::exp(x[i * cols + k] - hi);
    const T lse = hi + std::log(total);
    for (std::size_t k = 0; k < cols; ++k) out[i * cols + k] = x[i * cols + k] - lse;
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> gold) {
  check_classification(logits, gold, "cross_entropy");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  auto logp = log_softmax_rows<T>(logits.values(), rows, cols);
  T total{0};
  for (std::size_t i = 0; i < rows; ++i) total -= logp[i * cols + static_cast<std::size_t>(gold[i])];
  std::vector<int> labels(gold.begin(), gold.end());
  return make_result<T>("cross_entropy", {1}, {total / static_cast<T>(rows)}, {logits},
                        [logits, logp = std::move(logp), labels, rows, cols](detail::Node<T>& self) {
                          auto gl = grad_sink(logits);
                          if (gl.empty()) return;
                          const T g = self.grad[0] / static_cast<T>(rows);
                          for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t k = 0; k < cols; ++k) {
                              const T target = static_cast<int>(k) == labels[i] ? T{1} : T{0};
                              gl[i * cols + k] += g * (std::exp(logp[i * cols + k]) - target);
                            }
                        });
}

template <typename T>
Tensor<T> cross_entropy_label_smoothed(const Tensor<T>& logits, std::span<const int> gold, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw ContractError("cross_entropy_label_smoothed: eps " + std::to_string(eps) +
                        " outside [0, 1)");
  }
  check_classification(logits, gold, "cross_entropy_label_smoothed");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  const T uniform = static_cast<T>(eps) / static_cast<T>(cols);
  const T peak = T{1} - static_cast<T>(eps) + uniform;
  auto target = [=](std::size_t k, int g) { return static_cast<int>(k) == g ? peak : uniform; };

  auto logp = log_softmax_rows<T>(logits.values(), rows, cols);
  T total{0};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      const T q = target(k, gold[i]);
      if (q != T{0}) total -= q * logp[i * cols + k];
    }
  }
  std::vector<int> labels(gold.begin(), gold.end());
  return make_result<T>("cross_entropy_label_smoothed", {1}, {total / static_cast<T>(rows)}, {logits},
                        [logits, logp = std::move(logp), labels, rows, cols, target](detail::Node<T>& self) {
                          auto gl = grad_sink(logits);
                          if (gl.empty()) return;
                          const T g = self.grad[0] / static_cast<T>(rows);
                          for (std::size_t i = 0; i < rows; ++i)
                            for (std::size_t k = 0; k < cols; ++k)
                              gl[i * cols + k] +=
                                  g * (std::exp(logp[i * cols + k]) - target(k, labels[i]));
                        });
}

template <typename T>
Tensor<T> binary_cross_entropy_multilabel(const Tensor<T>& logits, std::span<const int> targets,
                                          std::span<const double> class_weights) {
  const std::size_t classes = logits.size();
  if (targets.size() != classes || (!class_weights.empty() && class_weights.size() != classes) ||
      classes == 0) {
    throw ContractError("binary_cross_entropy_multilabel: " + std::to_string(classes) + " logits, " +
                        std::to_string(targets.size()) + " targets, " +
                        std::to_string(class_weights.size()) + " weights");
  }
  std::vector<T> weights(classes, T{1});
  for (std::size_t k = 0; k < class_weights.size(); ++k) weights[k] = static_cast<T>(class_weights[k]);
  std::vector<int> y(targets.begin(), targets.end());

  const auto x = logits.values();
  T total{0};
  for (std::size_t k = 0; k < classes; ++k) {
    const T xk = x[k];
    total += weights[k] * (std::max(xk, T{0}) - xk * static_cast<T>(y[k]) + std::log1p(std::exp(-std::abs(xk))));
  }
  return make_result<T>("binary_cross_entropy_multilabel", {1}, {total / static_cast<T>(classes)}, {logits},
                        [logits, y, weights, classes](detail::Node<T>& self) {
                          auto gl = grad_sink(logits);
                          if (gl.empty()) return;
                          const T g = self.grad[0] / static_cast<T>(classes);
                          const auto xv = logits.values();
                          for (std::size_t k = 0; k < classes; ++k) {
                            const T xk = xv[k];
                            const T p = xk >= T{0} ? T{1} / (T{1} + std::exp(-xk))
                                                   : std::exp(xk) / (T{1} + std::exp(xk));
                            gl[k] += g * weights[k] * (p - static_cast<T>(y[k]));
                          }
                        });
}

#define PROPSPAN_INSTANTIATE_LOSSES(T)                                                               \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);                          \
  template Tensor<T> cross_entropy_label_smoothed(const Tensor<T>&, std::span<const int>, double);   \
  template Tensor<T> binary_cross_entropy_multilabel(const Tensor<T>&, std::span<const int>,         \
                                                     std::span<const double>);

PROPSPAN_INSTANTIATE_LOSSES(float)
PROPSPAN_INSTANTIATE_LOSSES(double)
PROPSPAN_INSTANTIATE_LOSSES(long double)

}  // namespace propspan::ag
