#pragma once

#include <functional>
#include <string>

#include "propspan/autograd/parameters.hpp"

namespace propspan::ag {

struct GradCheckResult {
  /// max over coordinates of |a - n| / max(|a|, |n|, 1e-8).
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Relative error between an analytic and a numeric derivative.
double relative_error(double analytic, double numeric);

/// Compares backprop gradients of `loss` with central differences
/// (f(x + h) - f(x - h)) / 2h at every coordinate of every parameter.
/// `loss` must be deterministic. Only 64-bit or wider precisions are accepted.
/// Throws Error naming the coordinate when a value is not finite.
template <typename T>
  requires(sizeof(T) >= 8)
GradCheckResult grad_check(const std::function<Tensor<T>()>& loss, const ParameterList<T>& params,
                           double h);

extern template GradCheckResult grad_check<double>(const std::function<Tensor<double>()>&,
                                                   const ParameterList<double>&, double);
extern template GradCheckResult grad_check<long double>(const std::function<Tensor<long double>()>&,
                                                        const ParameterList<long double>&, double);

}  // namespace propspan::ag
