#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/optimizer.hpp"
#include "propspan/autograd/parameters.hpp"

namespace propspan::encoder {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t feedforward_dim = 128;
  std::size_t max_positions = 128;
  double dropout = 0.1;
  /// Standard deviation of the normal initializer for weight matrices.
  double init_std = 0.02;

  /// Throws ValidationError listing every violated constraint.
  void validate() const;
};

/// Pre-LN transformer encoder with learned absolute positions and a final
/// layer norm. The masked-LM head reuses the token embedding matrix.
template <typename T>
class EncoderModel {
 public:
  using Tensor = ag::Tensor<T>;

  /// Parameters drawn from `rng`; the same seed gives the same model at any precision.
  EncoderModel(EncoderConfig config, ag::Rng& rng);

  const EncoderConfig& config() const { return config_; }

  /// Named handles, all prefixed "encoder.".
  ag::ParameterList<T> parameters() const;

  /// [T, hidden_dim] contextual activations. Dropout applies only when
  /// `dropout_rng` is given.
  Tensor encode(std::span<const int> ids, ag::Rng* dropout_rng = nullptr) const;

  /// [T, vocab_size] masked-LM logits for activations from encode().
  Tensor mlm_logits(const Tensor& activations) const;

  /// Mean cross-entropy at `positions` against `targets` for the corrupted
  /// input `ids`. Empty positions give a constant zero.
  Tensor mlm_loss(std::span<const int> ids, std::span<const int> positions,
                  std::span<const int> targets, ag::Rng* dropout_rng = nullptr) const;

 private:
  struct Layer {
    Tensor ln1_gain, ln1_bias;
    // No key bias: it shifts all scores of a query equally and cancels in the softmax.
    Tensor query, query_bias, key, value, value_bias, output, output_bias;
    Tensor ln2_gain, ln2_bias;
    Tensor ff_in, ff_in_bias, ff_out, ff_out_bias;
  };

  Tensor attention(const Layer& layer, const Tensor& x, ag::Rng* dropout_rng) const;
  Tensor maybe_dropout(const Tensor& x, ag::Rng* dropout_rng) const;

  EncoderConfig config_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  std::vector<Layer> layers_;
  Tensor final_gain_, final_bias_;
  Tensor mlm_bias_;
};

/// A corrupted copy of one sequence for masked-LM training.
struct MaskedSequence {
  std::vector<int> ids;
  std::vector<int> positions;
  std::vector<int> targets;
};

/// Selects each position with probability `rate`; a selected token becomes the
/// mask id (80%), a random regular id (10%) or stays unchanged (10%).
/// Reserved ids below `first_regular` are never selected.
MaskedSequence mask_tokens(std::span<const int> ids, double rate, std::size_t vocab_size,
                           int mask_id, int first_regular, ag::Rng& rng);

struct MlmOptions {
  std::size_t epochs = 3;
  double mask_rate = 0.15;
  std::size_t batch_size = 16;
  ag::AdamConfig adam{};
  std::uint64_t seed = 13;
  int mask_id = 4;
  int first_regular = 6;
};

/// In-task masked-LM training over sentence-level sequences. Returns the mean
/// loss of each epoch. Shuffles and masks from `options.seed`.
std::vector<double> mlm_pretrain(EncoderModel<float>& model, const std::vector<std::vector<int>>& corpus,
                                 const MlmOptions& options);

/// Mean masked-LM loss over `corpus` with masks drawn from `seed`, no updates.
double mlm_evaluate(const EncoderModel<float>& model, const std::vector<std::vector<int>>& corpus,
                    const MlmOptions& options, std::uint64_t seed);

extern template class EncoderModel<float>;
extern template class EncoderModel<double>;
extern template class EncoderModel<long double>;

}  // namespace propspan::encoder
