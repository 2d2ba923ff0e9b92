#pragma once

#include <random>
#include <span>

#include "propspan/autograd/tensor.hpp"

namespace propspan::ag {

using Rng = std::mt19937_64;

// Differentiable operations. Unless noted, operands are rank 2 ([rows, cols]).
// Shape violations throw ContractError naming the op and the shapes involved.

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Elementwise, any rank; shapes must match exactly.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// a[m,n] + bias[n], the bias repeated over the leading dimension.
template <typename T>
Tensor<T> add_row_vector(const Tensor<T>& a, const Tensor<T>& bias);

/// Joins along axis 0 (stack rows) or axis 1 (side by side).
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);
template <typename T>
Tensor<T> concat(std::initializer_list<Tensor<T>> parts, std::size_t axis) {
  return concat(std::span<const Tensor<T>>(parts.begin(), parts.size()), axis);
}

/// Half-open [begin, end) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> row(const Tensor<T>& a, std::size_t index) {
  return slice(a, 0, index, index + 1);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// Rows of table[V, n] selected by ids -> [ids.size(), n].
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const int> ids);

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis);

/// Normalizes each row to zero mean and unit variance, then gamma * x + beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T epsilon = T(1e-5));

// Elementwise nonlinearities, any rank.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a);
template <typename T>
Tensor<T> tanh(const Tensor<T>& a);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);

/// Sets scores[i, j] to -inf where j > i + offset.
template <typename T>
Tensor<T> causal_mask(const Tensor<T>& scores, std::size_t offset = 0);

/// softmax(q k^T / sqrt(d)) v. With `causal`, query i sees keys j <= i + (Tk - Tq).
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               bool causal);

/// Sum / mean of all elements as a shape-[1] tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

/// Inverted dropout. Identity when probability is 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double probability, Rng& rng);

}  // namespace propspan::ag
