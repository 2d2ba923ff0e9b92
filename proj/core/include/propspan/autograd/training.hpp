#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/optimizer.hpp"
#include "propspan/autograd/parameters.hpp"

namespace propspan::ag {

struct TrainLoopOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  AdamConfig adam{};
  std::uint64_t seed = 13;
};

/// Optimizer updates a run of `examples` items will take; used as total_steps.
inline std::size_t planned_updates(std::size_t examples, const TrainLoopOptions& options) {
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t accumulation = std::max<std::size_t>(1, options.adam.accumulation);
  const std::size_t batches = (examples + batch - 1) / batch;
  return options.epochs * ((batches + accumulation - 1) / accumulation);
}

/// Context handed to the per-example loss callback.
struct ExampleContext {
  std::size_t epoch = 0;
  /// Optimizer updates completed so far.
  std::size_t update = 0;
  std::size_t total_updates = 0;
  Rng* rng = nullptr;
};

/// Shuffled mini-batch training. Each example's loss is backpropagated scaled by
/// 1 / batch size; an update runs every `adam.accumulation` batches and after the
/// last batch of an epoch. Returns the mean example loss of each epoch.
/// `on_epoch(epoch, mean_loss)` runs after every epoch when set.
template <typename T>
std::vector<double> train_loop(std::size_t examples, const ParameterList<T>& params,
                               const TrainLoopOptions& options,
                               const std::function<Tensor<T>(std::size_t, const ExampleContext&)>& example_loss,
                               const std::function<void(std::size_t, double)>& on_epoch = {}) {
  if (examples == 0) throw ContractError("train_loop: no training examples");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t accumulation = std::max<std::size_t>(1, options.adam.accumulation);
  AdamConfig adam = options.adam;
  adam.accumulation = accumulation;
  adam.total_steps = std::max<std::size_t>(1, planned_updates(examples, options));
  OptimizerState state(adam);
  Rng rng(options.seed);

  std::vector<std::size_t> order(examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  zero_grads(params);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t pending = 0;
    for (std::size_t start = 0; start < examples; start += batch) {
      const std::size_t stop = std::min(examples, start + batch);
      const T weight = T(1) / static_cast<T>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        ExampleContext context{epoch, state.step, adam.total_steps, &rng};
        const auto loss = example_loss(order[i], context);
        total += static_cast<double>(loss.item());
        if (loss.requires_grad()) backward(scale(loss, weight));
      }
      if (++pending == accumulation || stop == examples) {
        adam_step(state, params);
        pending = 0;
      }
    }
    history.push_back(total / static_cast<double>(examples));
    if (on_epoch) on_epoch(epoch, history.back());
  }
  return history;
}

}  // namespace propspan::ag
