#pragma once

#include <span>

#include "propspan/autograd/tensor.hpp"

namespace propspan::ag {

/// Mean over rows of -log softmax(logits)[gold]. logits is [T, K], T >= 1.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> gold);

/// Mean over rows of -sum_k q_k log p_k with q = (1 - eps) onehot(gold) + eps / K.
/// Equals cross_entropy at eps = 0. Requires 0 <= eps < 1.
template <typename T>
Tensor<T> cross_entropy_label_smoothed(const Tensor<T>& logits, std::span<const int> gold, double eps);

/// Mean over the K classes of the sigmoid cross-entropy, in the overflow-free
/// form max(x, 0) - x y + log(1 + exp(-|x|)). Optional per-class weights.
template <typename T>
Tensor<T> binary_cross_entropy_multilabel(const Tensor<T>& logits, std::span<const int> targets,
                                          std::span<const double> class_weights = {});

}  // namespace propspan::ag
