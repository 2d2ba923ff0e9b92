#include "propspan/autograd/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace propspan::ag {

double learning_rate_factor(std::size_t step, std::size_t total_steps, double warmup_fraction) {
  if (total_steps == 0) throw ContractError("learning_rate_factor: total_steps must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ContractError("learning_rate_factor: warmup fraction outside [0, 1]");
  }
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_fraction * total;
  if (s < warmup) return s / warmup;
  if (total <= warmup) return 0.0;
  return std::clamp((total - s) / (total - warmup), 0.0, 1.0);
}

OptimizerState::OptimizerState(AdamConfig cfg) : config(cfg) {
  if (config.accumulation == 0) throw ContractError("optimizer: accumulation period must be positive");
  if (!(config.warmup_fraction >= 0.0 && config.warmup_fraction <= 1.0)) {
    throw ContractError("optimizer: warmup fraction outside [0, 1]");
  }
}

double OptimizerState::current_learning_rate() const {
  return config.learning_rate * learning_rate_factor(step, config.total_steps, config.warmup_fraction);
}

template <typename T>
void adam_step(OptimizerState& state, const ParameterList<T>& params) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), 0.0);
      state.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  const auto& cfg = state.config;
  const double lr = state.current_learning_rate();
  const double t = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const double inv_accumulation = 1.0 / static_cast<double>(cfg.accumulation);

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto tensor = params[p].tensor;
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    if (m.size() != tensor.size()) {
      throw ContractError("adam_step: moment size mismatch for " + params[p].name);
    }
    auto values = tensor.mutable_values();
    const bool has_grad = tensor.has_grad();
    const auto grad = tensor.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? static_cast<double>(grad[i]) * inv_accumulation : 0.0;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double update = lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + cfg.epsilon);
      values[i] = static_cast<T>(static_cast<double>(values[i]) - update);
    }
    tensor.zero_grad();
  }
  ++state.step;
}

template void adam_step<float>(OptimizerState&, const ParameterList<float>&);
template void adam_step<double>(OptimizerState&, const ParameterList<double>&);

}  // namespace propspan::ag
