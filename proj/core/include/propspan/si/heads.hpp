#pragma once

#include <span>
#include <vector>

#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/parameters.hpp"

namespace propspan::si {

/// Index of the largest entry of row `r`; ties go to the lowest index.
template <typename T>
int argmax_row(const ag::Tensor<T>& logits, std::size_t r);

/// Fills every position between the first and the last 1 with 1.
/// Throws ContractError on non-binary input.
std::vector<int> postprocess_fill(std::span<const int> tags);

/// Teacher-forcing rate after `step` of `total_steps` updates, moving linearly
/// from `start` to `end`.
double tf_rate(std::size_t step, std::size_t total_steps, double start = 1.0, double end = 0.0);

/// Independent per-token affine map.
template <typename T>
class LinearHead {
 public:
  using Tensor = ag::Tensor<T>;
  LinearHead(std::size_t input_dim, std::size_t labels, double init_std, ag::Rng& rng);
  /// [T, n] -> [T, K]. T = 0 gives an empty [0, K] tensor.
  Tensor logits(const Tensor& features) const;
  ag::ParameterList<T> parameters(const std::string& prefix) const;

  Tensor weight, bias;
};

/// Linear-chain CRF scores: transitions[i, j] scores label i followed by j.
template <typename T>
struct CrfParams {
  ag::Tensor<T> transitions;
  ag::Tensor<T> start;
  ag::Tensor<T> end;

  static CrfParams zeros(std::size_t labels);
  ag::ParameterList<T> parameters(const std::string& prefix) const;
};

/// Score of one label path: start + emissions + transitions + end.
template <typename T>
T crf_path_score(const ag::Tensor<T>& logits, std::span<const int> path, const CrfParams<T>& crf);

/// -(score(gold) - log Z), log Z from the forward algorithm in log space.
/// Gradients are the gold indicators minus the posterior marginals.
template <typename T>
ag::Tensor<T> crf_nll(const ag::Tensor<T>& logits, std::span<const int> gold, const CrfParams<T>& crf);

/// Highest-scoring path. Among equal scores the lower label id wins.
template <typename T>
std::vector<int> crf_viterbi(const ag::Tensor<T>& logits, const CrfParams<T>& crf);

struct DecoderConfig {
  std::size_t labels = 2;
  std::size_t hidden_dim = 128;
  std::size_t heads = 4;
  std::size_t layers = 1;
  std::size_t feedforward_dim = 256;
  std::size_t max_positions = 128;
};

/// Autoregressive tag decoder. Position i embeds the previous label (a start
/// label at i = 0) plus a learned position, runs causal self-attention over
/// earlier positions, then joins its hidden state with encoder row E_i through
/// concatenation and an affine layer before the output projection. No
/// attention over the encoder sequence.
template <typename T>
class LaserTagger {
 public:
  using Tensor = ag::Tensor<T>;

  /// Incremental decoding state: cached attention keys and values per layer.
  struct State {
    std::size_t position = 0;
    std::vector<std::vector<Tensor>> keys;
    std::vector<std::vector<Tensor>> values;
  };

  LaserTagger(DecoderConfig config, std::size_t input_dim, double init_std, ag::Rng& rng);

  const DecoderConfig& config() const { return config_; }
  ag::ParameterList<T> parameters(const std::string& prefix) const;

  State start() const;

  /// Logits [1, K] for position state.position, given encoder row [1, n] and the
  /// labels emitted so far. Throws ContractError unless
  /// prev_labels.size() == state.position.
  Tensor step(const Tensor& encoder_row, std::span<const int> prev_labels, State& state) const;

  /// Sequential decoding over gold labels. Each position draws one uniform; the
  /// label fed onward is gold when the draw is below `rate`, else the argmax.
  /// Returns [T, K] logits; the fed labels go to `fed` when given.
  Tensor decode_train(const Tensor& encoder_out, std::span<const int> gold, double rate, ag::Rng& rng,
                      std::vector<int>* fed = nullptr) const;

  /// Label-smoothed cross-entropy of decode_train.
  Tensor train_sequence(const Tensor& encoder_out, std::span<const int> gold, double rate, ag::Rng& rng,
                        double label_smoothing) const;

  /// All positions at once under full teacher forcing, with a causal mask.
  Tensor forced_logits(const Tensor& encoder_out, std::span<const int> gold) const;

  /// Greedy left-to-right decoding feeding back its own predictions.
  std::vector<int> infer(const Tensor& encoder_out) const;

 private:
  struct Layer {
    Tensor ln1_gain, ln1_bias;
    // No key bias: it shifts all scores of a query equally and cancels in the softmax.
    Tensor query, query_bias, key, value, value_bias, output, output_bias;
    Tensor ln2_gain, ln2_bias;
    Tensor ff_in, ff_in_bias, ff_out, ff_out_bias;
  };

  Tensor embed_inputs(std::span<const int> previous, std::size_t first_position) const;
  Tensor attend(const Layer& layer, const Tensor& q, const Tensor& k, const Tensor& v, bool causal) const;
  Tensor feedforward(const Layer& layer, const Tensor& x) const;
  Tensor readout(const Tensor& hidden, const Tensor& encoder_rows) const;

  DecoderConfig config_;
  std::size_t input_dim_;
  Tensor label_embedding_;  // [K + 1, d]; row K is the start label
  Tensor position_embedding_;
  Tensor input_gain_, input_bias_;
  std::vector<Layer> layers_;
  Tensor final_gain_, final_bias_;
  Tensor combine_, combine_bias_;  // [d + n, d]
  Tensor output_, output_bias_;    // [d, K]
};

/// One bidirectional LSTM layer over trained embeddings.
template <typename T>
class BiLstm {
 public:
  using Tensor = ag::Tensor<T>;
  BiLstm(std::size_t vocab_size, std::size_t embedding_dim, std::size_t hidden_dim, double init_std,
         ag::Rng& rng);
  ag::ParameterList<T> parameters(const std::string& prefix) const;
  std::size_t output_dim() const { return 2 * hidden_dim_; }
  /// [T, 2h]: forward states then backward states per token.
  Tensor features(std::span<const int> ids, double dropout, ag::Rng* dropout_rng) const;

 private:
  struct Direction {
    Tensor input, recurrent, bias;  // [e, 4h], [h, 4h], [4h]; gate order i, f, g, o
  };
  Tensor run(const Direction& d, const Tensor& projected, bool reverse) const;

  std::size_t vocab_size_, hidden_dim_;
  Tensor embedding_;
  Direction forward_, backward_;
};

extern template class LinearHead<float>;
extern template class LinearHead<double>;
extern template class LinearHead<long double>;
extern template struct CrfParams<float>;
extern template struct CrfParams<double>;
extern template struct CrfParams<long double>;
extern template class LaserTagger<float>;
extern template class LaserTagger<double>;
extern template class LaserTagger<long double>;
extern template class BiLstm<float>;
extern template class BiLstm<double>;
extern template class BiLstm<long double>;

}  // namespace propspan::si
