#pragma once

#include <string>
#include <vector>

#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/tensor.hpp"

namespace propspan::ag {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

/// Handles into a model's parameters; writes through them mutate the model.
template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

template <typename T>
void zero_grads(const ParameterList<T>& params) {
  for (const auto& p : params) {
    auto t = p.tensor;
    t.zero_grad();
  }
}

template <typename T>
std::size_t parameter_count(const ParameterList<T>& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor.size();
  return total;
}

/// Copies values between equally named, equally shaped parameters, converting
/// precision. Both lists must name the same set of parameters.
template <typename To, typename From>
void copy_parameters(const ParameterList<From>& source, const ParameterList<To>& target) {
  if (source.size() != target.size()) {
    throw ContractError("copy_parameters: " + std::to_string(source.size()) + " vs " +
                        std::to_string(target.size()) + " parameters");
  }
  for (const auto& dst : target) {
    const NamedParameter<From>* src = nullptr;
    for (const auto& candidate : source) {
      if (candidate.name == dst.name) src = &candidate;
    }
    if (!src || src->tensor.shape() != dst.tensor.shape()) {
      throw ContractError("copy_parameters: no matching source for " + dst.name);
    }
    auto out = dst.tensor;
    auto values = out.mutable_values();
    const auto in = src->tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<To>(in[i]);
  }
}

// Initializers. Values are drawn in double precision and then converted, so a
// seed yields the same model at every precision.
template <typename T>
Tensor<T> normal_parameter(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(shape_size(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>::parameter(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> constant_parameter(Shape shape, double value) {
  std::vector<T> values(shape_size(shape), static_cast<T>(value));
  return Tensor<T>::parameter(std::move(shape), std::move(values));
}

}  // namespace propspan::ag
