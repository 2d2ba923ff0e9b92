#include "propspan/encoder/encoder.hpp"

#include <string>

#include "propspan/autograd/losses.hpp"
#include "propspan/autograd/training.hpp"

namespace propspan::encoder {

using namespace propspan::ag;

void EncoderConfig::validate() const {
  std::vector<std::string> problems;
  if (vocab_size == 0) problems.push_back("vocab_size must be positive");
  if (hidden_dim == 0) problems.push_back("hidden_dim must be positive");
  if (heads == 0) problems.push_back("heads must be positive");
  if (heads != 0 && hidden_dim % heads != 0) problems.push_back("hidden_dim must be divisible by heads");
  if (feedforward_dim == 0) problems.push_back("feedforward_dim must be positive");
  if (max_positions == 0) problems.push_back("max_positions must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) problems.push_back("dropout must lie in [0, 1)");
  if (!(init_std > 0.0)) problems.push_back("init_std must be positive");
  if (problems.empty()) return;
  std::string message = "encoder config:";
  for (const auto& p : problems) message += " " + p + ";";
  message.pop_back();
  throw ValidationError(message);
}

template <typename T>
EncoderModel<T>::EncoderModel(EncoderConfig config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t n = config_.hidden_dim, ff = config_.feedforward_dim;
  const double std = config_.init_std;
  token_embedding_ = normal_parameter<T>({config_.vocab_size, n}, std, rng);
  position_embedding_ = normal_parameter<T>({config_.max_positions, n}, std, rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.ln1_gain = constant_parameter<T>({n}, 1.0);
    layer.ln1_bias = constant_parameter<T>({n}, 0.0);
    layer.query = normal_parameter<T>({n, n}, std, rng);
    layer.query_bias = constant_parameter<T>({n}, 0.0);
    layer.key = normal_parameter<T>({n, n}, std, rng);
    layer.value = normal_parameter<T>({n, n}, std, rng);
    layer.value_bias = constant_parameter<T>({n}, 0.0);
    layer.output = normal_parameter<T>({n, n}, std, rng);
    layer.output_bias = constant_parameter<T>({n}, 0.0);
    layer.ln2_gain = constant_parameter<T>({n}, 1.0);
    layer.ln2_bias = constant_parameter<T>({n}, 0.0);
    layer.ff_in = normal_parameter<T>({n, ff}, std, rng);
    layer.ff_in_bias = constant_parameter<T>({ff}, 0.0);
    layer.ff_out = normal_parameter<T>({ff, n}, std, rng);
    layer.ff_out_bias = constant_parameter<T>({n}, 0.0);
    layers_.push_back(std::move(layer));
  }
  final_gain_ = constant_parameter<T>({n}, 1.0);
  final_bias_ = constant_parameter<T>({n}, 0.0);
  mlm_bias_ = constant_parameter<T>({config_.vocab_size}, 0.0);
}

template <typename T>
ParameterList<T> EncoderModel<T>::parameters() const {
  ParameterList<T> out{{"encoder.token_embedding", token_embedding_},
                       {"encoder.position_embedding", position_embedding_}};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    out.push_back({p + "ln1.gain", layer.ln1_gain});
    out.push_back({p + "ln1.bias", layer.ln1_bias});
    out.push_back({p + "attention.query", layer.query});
    out.push_back({p + "attention.query_bias", layer.query_bias});
    out.push_back({p + "attention.key", layer.key});
    out.push_back({p + "attention.value", layer.value});
    out.push_back({p + "attention.value_bias", layer.value_bias});
    out.push_back({p + "attention.output", layer.output});
    out.push_back({p + "attention.output_bias", layer.output_bias});
    out.push_back({p + "ln2.gain", layer.ln2_gain});
    out.push_back({p + "ln2.bias", layer.ln2_bias});
    out.push_back({p + "ff.in", layer.ff_in});
    out.push_back({p + "ff.in_bias", layer.ff_in_bias});
    out.push_back({p + "ff.out", layer.ff_out});
    out.push_back({p + "ff.out_bias", layer.ff_out_bias});
  }
  out.push_back({"encoder.final_ln.gain", final_gain_});
  out.push_back({"encoder.final_ln.bias", final_bias_});
  out.push_back({"encoder.mlm_bias", mlm_bias_});
  return out;
}

template <typename T>
Tensor<T> EncoderModel<T>::maybe_dropout(const Tensor& x, Rng* dropout_rng) const {
  if (!dropout_rng || config_.dropout == 0.0) return x;
  return dropout(x, config_.dropout, *dropout_rng);
}

template <typename T>
Tensor<T> EncoderModel<T>::attention(const Layer& layer, const Tensor& x, Rng* dropout_rng) const {
  const auto q = add_row_vector(matmul(x, layer.query), layer.query_bias);
  const auto k = matmul(x, layer.key);
  const auto v = add_row_vector(matmul(x, layer.value), layer.value_bias);
  const std::size_t width = config_.hidden_dim / config_.heads;
  std::vector<Tensor> heads;
  heads.reserve(config_.heads);
  for (std::size_t h = 0; h < config_.heads; ++h) {
    const std::size_t b = h * width, e = b + width;
    heads.push_back(scaled_dot_attention(slice(q, 1, b, e), slice(k, 1, b, e), slice(v, 1, b, e), false));
  }
  const auto joined = config_.heads == 1 ? heads.front() : concat(std::span<const Tensor>(heads), 1);
  return maybe_dropout(add_row_vector(matmul(joined, layer.output), layer.output_bias), dropout_rng);
}

template <typename T>
Tensor<T> EncoderModel<T>::encode(std::span<const int> ids, Rng* dropout_rng) const {
  if (ids.empty()) throw ContractError("encode: empty sequence");
  if (ids.size() > config_.max_positions) {
    throw ContractError("encode: sequence of " + std::to_string(ids.size()) + " tokens exceeds max_positions " +
                        std::to_string(config_.max_positions));
  }
  std::vector<int> positions(ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  auto x = add(embedding_lookup(token_embedding_, ids), embedding_lookup(position_embedding_, std::span<const int>(positions)));
  x = maybe_dropout(x, dropout_rng);
  for (const auto& layer : layers_) {
    x = add(x, attention(layer, layer_norm(x, layer.ln1_gain, layer.ln1_bias), dropout_rng));
    auto hidden = gelu(add_row_vector(matmul(layer_norm(x, layer.ln2_gain, layer.ln2_bias), layer.ff_in), layer.ff_in_bias));
    x = add(x, maybe_dropout(add_row_vector(matmul(hidden, layer.ff_out), layer.ff_out_bias), dropout_rng));
  }
  return layer_norm(x, final_gain_, final_bias_);
}

template <typename T>
Tensor<T> EncoderModel<T>::mlm_logits(const Tensor& activations) const {
  return add_row_vector(matmul(activations, transpose(token_embedding_)), mlm_bias_);
}

template <typename T>
Tensor<T> EncoderModel<T>::mlm_loss(std::span<const int> ids, std::span<const int> positions,
                                    std::span<const int> targets, Rng* dropout_rng) const {
  if (positions.size() != targets.size()) throw ContractError("mlm_loss: positions and targets differ in length");
  if (positions.empty()) return Tensor::scalar(T{0});
  const auto activations = encode(ids, dropout_rng);
  std::vector<Tensor> rows;
  rows.reserve(positions.size());
  for (int p : positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= ids.size()) throw ContractError("mlm_loss: position out of range");
    rows.push_back(row(activations, static_cast<std::size_t>(p)));
  }
  const auto selected = rows.size() == 1 ? rows.front() : concat(std::span<const Tensor>(rows), 0);
  return cross_entropy(mlm_logits(selected), targets);
}

MaskedSequence mask_tokens(std::span<const int> ids, double rate, std::size_t vocab_size, int mask_id,
                           int first_regular, Rng& rng) {
  MaskedSequence out;
  out.ids.assign(ids.begin(), ids.end());
  if (rate <= 0.0) return out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool can_replace = static_cast<std::size_t>(first_regular) < vocab_size;
  std::uniform_int_distribution<int> regular(first_regular, static_cast<int>(vocab_size) - 1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double selector = unit(rng);
    const double action = unit(rng);
    if (ids[i] < first_regular || selector >= rate) continue;
    out.positions.push_back(static_cast<int>(i));
    out.targets.push_back(ids[i]);
    if (action < 0.8) {
      out.ids[i] = mask_id;
    } else if (action < 0.9 && can_replace) {
      out.ids[i] = regular(rng);
    }
  }
  return out;
}

std::vector<double> mlm_pretrain(EncoderModel<float>& model, const std::vector<std::vector<int>>& corpus,
                                 const MlmOptions& options) {
  if (corpus.empty()) throw ContractError("mlm_pretrain: empty corpus");
  TrainLoopOptions loop{options.epochs, options.batch_size, options.adam, options.seed};
  const auto vocab = model.config().vocab_size;
  return train_loop<float>(corpus.size(), model.parameters(), loop, [&](std::size_t index, const ExampleContext& context) {
    const auto masked = mask_tokens(corpus[index], options.mask_rate, vocab, options.mask_id, options.first_regular,
                                    *context.rng);
    return model.mlm_loss(masked.ids, masked.positions, masked.targets, context.rng);
  });
}

double mlm_evaluate(const EncoderModel<float>& model, const std::vector<std::vector<int>>& corpus,
                    const MlmOptions& options, std::uint64_t seed) {
  if (corpus.empty()) return 0.0;
  NoGradGuard guard;
  Rng rng(seed);
  double total = 0.0;
  for (const auto& ids : corpus) {
    const auto masked = mask_tokens(ids, options.mask_rate, model.config().vocab_size, options.mask_id,
                                    options.first_regular, rng);
    total += model.mlm_loss(masked.ids, masked.positions, masked.targets).item();
  }
  return total / static_cast<double>(corpus.size());
}

template class EncoderModel<float>;
template class EncoderModel<double>;
template class EncoderModel<long double>;

}  // namespace propspan::encoder
