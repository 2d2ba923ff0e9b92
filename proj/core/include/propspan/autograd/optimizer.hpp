#pragma once

#include <cstddef>
#include <vector>

#include "propspan/autograd/parameters.hpp"

namespace propspan::ag {

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Share of total_steps spent ramping the learning rate from 0 to its base value.
  double warmup_fraction = 0.1;
  std::size_t total_steps = 1;
  /// Micro-batches whose gradients are summed into one update.
  std::size_t accumulation = 2;
};

/// Piecewise-linear learning-rate multiplier: 0 -> 1 over the first
/// warmup_fraction * total_steps updates, then 1 -> 0 at total_steps.
double learning_rate_factor(std::size_t step, std::size_t total_steps, double warmup_fraction);

struct OptimizerState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  explicit OptimizerState(AdamConfig cfg = {});
  double current_learning_rate() const;
};

/// Bias-corrected Adam update at the scheduled learning rate. Gradients are
/// divided by the accumulation period first and zeroed afterwards.
template <typename T>
void adam_step(OptimizerState& state, const ParameterList<T>& params);

extern template void adam_step<float>(OptimizerState&, const ParameterList<float>&);
extern template void adam_step<double>(OptimizerState&, const ParameterList<double>&);

}  // namespace propspan::ag
