#include "propspan/autograd/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace propspan::ag {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

template <typename T>
  requires(sizeof(T) >= 8)
GradCheckResult grad_check(const std::function<Tensor<T>()>& loss, const ParameterList<T>& params,
                           double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");
  zero_grads(params);
  const auto value = loss();
  if (!std::isfinite(static_cast<double>(value.item()))) throw Error("grad_check: loss is not finite");
  backward(value);

  GradCheckResult result;
  NoGradGuard no_grad;
  for (const auto& param : params) {
    auto tensor = param.tensor;
    std::vector<T> analytic(tensor.size(), T{0});
    if (tensor.has_grad()) std::copy(tensor.grad().begin(), tensor.grad().end(), analytic.begin());
    auto values = tensor.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + static_cast<T>(h);
      const T plus = loss().item();
      values[i] = saved - static_cast<T>(h);
      const T minus = loss().item();
      values[i] = saved;
      const T numeric = (plus - minus) / (T{2} * static_cast<T>(h));
      if (!std::isfinite(static_cast<double>(numeric)) || !std::isfinite(static_cast<double>(analytic[i]))) {
        throw Error("grad_check: non-finite derivative at " + param.name + "[" + std::to_string(i) + "]");
      }
      // Difference taken in T so extended precision is not lost before rounding.
      const T diff = analytic[i] - numeric;
      const T denom = std::max({std::abs(analytic[i]), std::abs(numeric), static_cast<T>(1e-8)});
      const double err = static_cast<double>(std::abs(diff) / denom);
      ++result.coordinates;
      if (err > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = err;
        result.worst_parameter = param.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

template GradCheckResult grad_check<double>(const std::function<Tensor<double>()>&,
                                            const ParameterList<double>&, double);
template GradCheckResult grad_check<long double>(const std::function<Tensor<long double>()>&,
                                                 const ParameterList<long double>&, double);

}  // namespace propspan::ag
