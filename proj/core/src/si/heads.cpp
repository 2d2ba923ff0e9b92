#include "propspan/si/heads.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>

#include "propspan/autograd/losses.hpp"

namespace propspan::si {

using namespace propspan::ag;

namespace {

template <typename T>
using Wide = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

template <typename A>
A log_sum_exp(const std::vector<A>& xs) {
  A top = -std::numeric_limits<A>::infinity();
  for (A x : xs) top = std::max(top, x);
  if (std::isinf(top)) return top;
  A total = 0;
  for (A x : xs) total += std::exp(x - top);
  return top + std::log(total);
}

void require_labels(std::span<const int> labels, std::size_t steps, std::size_t classes, const char* op) {
  if (labels.size() != steps) {
    throw ContractError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(steps) + " positions");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes) {
      throw ContractError(std::string(op) + ": label " + std::to_string(l) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

template <typename T>
void require_crf_shapes(const Tensor<T>& logits, const CrfParams<T>& crf, const char* op) {
  if (logits.rank() != 2 || logits.dim(0) == 0) {
    throw ContractError(std::string(op) + ": logits must be [T, K] with T >= 1, got " +
                        shape_string(logits.shape()));
  }
  const std::size_t k = logits.dim(1);
  if (crf.transitions.shape() != Shape{k, k} || crf.start.size() != k || crf.end.size() != k) {
    throw ContractError(std::string(op) + ": CRF parameters do not match " + std::to_string(k) + " labels");
  }
}

template <typename T>
Tensor<T> multi_head(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t heads, bool causal) {
  if (heads == 1) return scaled_dot_attention(q, k, v, causal);
  const std::size_t width = q.dim(1) / heads;
  std::vector<Tensor<T>> parts;
  parts.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t b = h * width, e = b + width;
    parts.push_back(scaled_dot_attention(slice(q, 1, b, e), slice(k, 1, b, e), slice(v, 1, b, e), causal));
  }
  return concat(std::span<const Tensor<T>>(parts), 1);
}

}  // namespace

template <typename T>
int argmax_row(const Tensor<T>& logits, std::size_t r) {
  const std::size_t k = logits.dim(1);
  int best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (logits.at(r, j) > logits.at(r, static_cast<std::size_t>(best))) best = static_cast<int>(j);
  }
  return best;
}

std::vector<int> postprocess_fill(std::span<const int> tags) {
  std::vector<int> out(tags.begin(), tags.end());
  std::size_t first = out.size(), last = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] != 0 && out[i] != 1) {
      throw ContractError("postprocess_fill: tag " + std::to_string(out[i]) + " at position " + std::to_string(i) +
                          " is not binary");
    }
    if (out[i] == 1) {
      first = std::min(first, i);
      last = i;
    }
  }
  for (std::size_t i = first; i < last; ++i) out[i] = 1;
  return out;
}

double tf_rate(std::size_t step, std::size_t total_steps, double start, double end) {
  if (total_steps == 0) throw ContractError("tf_rate: total_steps must be positive");
  if (!(start >= 0.0 && start <= 1.0 && end >= 0.0 && end <= 1.0)) {
    throw ContractError("tf_rate: schedule endpoints outside [0, 1]");
  }
  if (step >= total_steps) return end;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return start + (end - start) * progress;
}

// ---- linear head ----

template <typename T>
LinearHead<T>::LinearHead(std::size_t input_dim, std::size_t labels, double init_std, Rng& rng)
    : weight(normal_parameter<T>({input_dim, labels}, init_std, rng)), bias(constant_parameter<T>({labels}, 0.0)) {}

template <typename T>
Tensor<T> LinearHead<T>::logits(const Tensor& features) const {
  if (features.rank() == 2 && features.dim(0) == 0) return Tensor::zeros({0, weight.dim(1)});
  return add_row_vector(matmul(features, weight), bias);
}

template <typename T>
ParameterList<T> LinearHead<T>::parameters(const std::string& prefix) const {
  return {{prefix + "weight", weight}, {prefix + "bias", bias}};
}

// ---- CRF ----

template <typename T>
CrfParams<T> CrfParams<T>::zeros(std::size_t labels) {
  return {constant_parameter<T>({labels, labels}, 0.0), constant_parameter<T>({labels}, 0.0),
          constant_parameter<T>({labels}, 0.0)};
}

template <typename T>
ParameterList<T> CrfParams<T>::parameters(const std::string& prefix) const {
  return {{prefix + "transitions", transitions}, {prefix + "start", start}, {prefix + "end", end}};
}

template <typename T>
T crf_path_score(const Tensor<T>& logits, std::span<const int> path, const CrfParams<T>& crf) {
  require_crf_shapes(logits, crf, "crf_path_score");
  const std::size_t steps = logits.dim(0), k = logits.dim(1);
  require_labels(path, steps, k, "crf_path_score");
  const auto tr = crf.transitions.values();
  T score = crf.start.values()[static_cast<std::size_t>(path[0])];
  for (std::size_t t = 0; t < steps; ++t) {
    const auto y = static_cast<std::size_t>(path[t]);
    score += logits.at(t, y);
    if (t > 0) score += tr[static_cast<std::size_t>(path[t - 1]) * k + y];
  }
  return score + crf.end.values()[static_cast<std::size_t>(path[steps - 1])];
}

template <typename T>
Tensor<T> crf_nll(const Tensor<T>& logits, std::span<const int> gold, const CrfParams<T>& crf) {
  using A = Wide<T>;
  require_crf_shapes(logits, crf, "crf_nll");
  const std::size_t steps = logits.dim(0), k = logits.dim(1);
  require_labels(gold, steps, k, "crf_nll");
  const auto x = logits.values();
  const auto tr = crf.transitions.values();
  const auto st = crf.start.values();
  const auto en = crf.end.values();

  std::vector<A> alpha(steps * k), terms(k);
  for (std::size_t j = 0; j < k; ++j) alpha[j] = A(st[j]) + A(x[j]);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) terms[i] = alpha[(t - 1) * k + i] + A(tr[i * k + j]);
      alpha[t * k + j] = log_sum_exp(terms) + A(x[t * k + j]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) terms[j] = alpha[(steps - 1) * k + j] + A(en[j]);
  const A log_z = log_sum_exp(terms);
  const A gold_score = A(crf_path_score(logits, gold, crf));
  const std::vector<int> path(gold.begin(), gold.end());

  return make_result<T>(
      "crf_nll", {1}, {T(log_z - gold_score)}, {logits, crf.transitions, crf.start, crf.end},
      [logits, crf, path, alpha, log_z, steps, k](detail::Node<T>& self) {
        const A g = A(self.grad[0]);
        const auto x = logits.values();
        const auto tr = crf.transitions.values();
        const auto en = crf.end.values();
        std::vector<A> beta(steps * k), terms(k);
        for (std::size_t i = 0; i < k; ++i) beta[(steps - 1) * k + i] = A(en[i]);
        for (std::size_t t = steps - 1; t-- > 0;) {
          for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
              terms[j] = A(tr[i * k + j]) + A(x[(t + 1) * k + j]) + beta[(t + 1) * k + j];
            }
            beta[t * k + i] = log_sum_exp(terms);
          }
        }
        auto marginal = [&](std::size_t t, std::size_t j) {
          return std::exp(alpha[t * k + j] + beta[t * k + j] - log_z);
        };
        if (auto gx = grad_sink(logits); !gx.empty()) {
          for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t j = 0; j < k; ++j) {
              const A indicator = path[t] == static_cast<int>(j) ? A(1) : A(0);
              gx[t * k + j] += T(g * (marginal(t, j) - indicator));
            }
          }
        }
        if (auto gs = grad_sink(crf.start); !gs.empty()) {
          for (std::size_t j = 0; j < k; ++j) {
            gs[j] += T(g * (marginal(0, j) - (path[0] == static_cast<int>(j) ? A(1) : A(0))));
          }
        }
        if (auto ge = grad_sink(crf.end); !ge.empty()) {
          for (std::size_t j = 0; j < k; ++j) {
            ge[j] += T(g * (marginal(steps - 1, j) - (path[steps - 1] == static_cast<int>(j) ? A(1) : A(0))));
          }
        }
        if (auto gt = grad_sink(crf.transitions); !gt.empty()) {
          std::vector<A> expected(k * k, A(0));
          for (std::size_t t = 1; t < steps; ++t) {
            for (std::size_t i = 0; i < k; ++i) {
              for (std::size_t j = 0; j < k; ++j) {
                expected[i * k + j] += std::exp(alpha[(t - 1) * k + i] + A(tr[i * k + j]) + A(x[t * k + j]) +
                                                beta[t * k + j] - log_z);
              }
            }
            expected[static_cast<std::size_t>(path[t - 1]) * k + static_cast<std::size_t>(path[t])] -= A(1);
          }
          for (std::size_t i = 0; i < k * k; ++i) gt[i] += T(g * expected[i]);
        }
      });
}

template <typename T>
std::vector<int> crf_viterbi(const Tensor<T>& logits, const CrfParams<T>& crf) {
  using A = Wide<T>;
  require_crf_shapes(logits, crf, "crf_viterbi");
  const std::size_t steps = logits.dim(0), k = logits.dim(1);
  const auto tr = crf.transitions.values();
  std::vector<A> best(steps * k);
  std::vector<int> back(steps * k, 0);
  for (std::size_t j = 0; j < k; ++j) best[j] = A(crf.start.values()[j]) + A(logits.at(0, j));
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t arg = 0;
      A top = best[(t - 1) * k] + A(tr[j]);
      for (std::size_t i = 1; i < k; ++i) {
        const A candidate = best[(t - 1) * k + i] + A(tr[i * k + j]);
        if (candidate > top) {
          top = candidate;
          arg = i;
        }
      }
      best[t * k + j] = top + A(logits.at(t, j));
      back[t * k + j] = static_cast<int>(arg);
    }
  }
  std::size_t last = 0;
  A top = best[(steps - 1) * k] + A(crf.end.values()[0]);
  for (std::size_t j = 1; j < k; ++j) {
    const A candidate = best[(steps - 1) * k + j] + A(crf.end.values()[j]);
    if (candidate > top) {
      top = candidate;
      last = j;
    }
  }
  std::vector<int> path(steps);
  path[steps - 1] = static_cast<int>(last);
  for (std::size_t t = steps - 1; t > 0; --t) {
    path[t - 1] = back[t * k + static_cast<std::size_t>(path[t])];
  }
  return path;
}

// ---- LaserTagger decoder ----

template <typename T>
LaserTagger<T>::LaserTagger(DecoderConfig config, std::size_t input_dim, double init_std, Rng& rng)
    : config_(config), input_dim_(input_dim) {
  if (config_.labels < 2) throw ValidationError("decoder: label count must be at least 2");
  if (config_.heads == 0 || config_.hidden_dim % config_.heads != 0) {
    throw ValidationError("decoder: hidden_dim must be divisible by heads");
  }
  const std::size_t d = config_.hidden_dim, ff = config_.feedforward_dim, k = config_.labels;
  label_embedding_ = normal_parameter<T>({k + 1, d}, init_std, rng);
  position_embedding_ = normal_parameter<T>({config_.max_positions, d}, init_std, rng);
  input_gain_ = constant_parameter<T>({d}, 1.0);
  input_bias_ = constant_parameter<T>({d}, 0.0);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.ln1_gain = constant_parameter<T>({d}, 1.0);
    layer.ln1_bias = constant_parameter<T>({d}, 0.0);
    layer.query = normal_parameter<T>({d, d}, init_std, rng);
    layer.query_bias = constant_parameter<T>({d}, 0.0);
    layer.key = normal_parameter<T>({d, d}, init_std, rng);
    layer.value = normal_parameter<T>({d, d}, init_std, rng);
    layer.value_bias = constant_parameter<T>({d}, 0.0);
    layer.output = normal_parameter<T>({d, d}, init_std, rng);
    layer.output_bias = constant_parameter<T>({d}, 0.0);
    layer.ln2_gain = constant_parameter<T>({d}, 1.0);
    layer.ln2_bias = constant_parameter<T>({d}, 0.0);
    layer.ff_in = normal_parameter<T>({d, ff}, init_std, rng);
    layer.ff_in_bias = constant_parameter<T>({ff}, 0.0);
    layer.ff_out = normal_parameter<T>({ff, d}, init_std, rng);
    layer.ff_out_bias = constant_parameter<T>({d}, 0.0);
    layers_.push_back(std::move(layer));
  }
  final_gain_ = constant_parameter<T>({d}, 1.0);
  final_bias_ = constant_parameter<T>({d}, 0.0);
  combine_ = normal_parameter<T>({d + input_dim, d}, init_std, rng);
  combine_bias_ = constant_parameter<T>({d}, 0.0);
  output_ = normal_parameter<T>({d, k}, init_std, rng);
  output_bias_ = constant_parameter<T>({k}, 0.0);
}

template <typename T>
ParameterList<T> LaserTagger<T>::parameters(const std::string& prefix) const {
  ParameterList<T> out{{prefix + "label_embedding", label_embedding_},
                       {prefix + "position_embedding", position_embedding_},
                       {prefix + "input_ln.gain", input_gain_},
                       {prefix + "input_ln.bias", input_bias_}};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
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
  out.push_back({prefix + "final_ln.gain", final_gain_});
  out.push_back({prefix + "final_ln.bias", final_bias_});
  out.push_back({prefix + "combine", combine_});
  out.push_back({prefix + "combine_bias", combine_bias_});
  out.push_back({prefix + "output", output_});
  out.push_back({prefix + "output_bias", output_bias_});
  return out;
}

template <typename T>
typename LaserTagger<T>::State LaserTagger<T>::start() const {
  State state;
  state.keys.resize(layers_.size());
  state.values.resize(layers_.size());
  return state;
}

template <typename T>
Tensor<T> LaserTagger<T>::embed_inputs(std::span<const int> previous, std::size_t first_position) const {
  if (first_position + previous.size() > config_.max_positions) {
    throw ContractError("lasertagger: position " + std::to_string(first_position + previous.size()) +
                        " exceeds max_positions " + std::to_string(config_.max_positions));
  }
  std::vector<int> positions(previous.size());
  std::iota(positions.begin(), positions.end(), static_cast<int>(first_position));
  const auto x = add(embedding_lookup(label_embedding_, previous),
                     embedding_lookup(position_embedding_, std::span<const int>(positions)));
  return layer_norm(x, input_gain_, input_bias_);
}

template <typename T>
Tensor<T> LaserTagger<T>::attend(const Layer& layer, const Tensor& q, const Tensor& k, const Tensor& v,
                                 bool causal) const {
  return add_row_vector(matmul(multi_head(q, k, v, config_.heads, causal), layer.output), layer.output_bias);
}

template <typename T>
Tensor<T> LaserTagger<T>::feedforward(const Layer& layer, const Tensor& x) const {
  const auto hidden = gelu(add_row_vector(matmul(layer_norm(x, layer.ln2_gain, layer.ln2_bias), layer.ff_in),
                                          layer.ff_in_bias));
  return add(x, add_row_vector(matmul(hidden, layer.ff_out), layer.ff_out_bias));
}

template <typename T>
Tensor<T> LaserTagger<T>::readout(const Tensor& hidden, const Tensor& encoder_rows) const {
  const auto h = layer_norm(hidden, final_gain_, final_bias_);
  const auto joined = gelu(add_row_vector(matmul(concat<T>({h, encoder_rows}, 1), combine_), combine_bias_));
  return add_row_vector(matmul(joined, output_), output_bias_);
}

template <typename T>
Tensor<T> LaserTagger<T>::step(const Tensor& encoder_row, std::span<const int> prev_labels, State& state) const {
  if (prev_labels.size() != state.position) {
    throw ContractError("lasertagger_step: " + std::to_string(prev_labels.size()) + " previous labels at position " +
                        std::to_string(state.position));
  }
  if (encoder_row.rank() != 2 || encoder_row.dim(0) != 1 || encoder_row.dim(1) != input_dim_) {
    throw ContractError("lasertagger_step: encoder row must be [1, " + std::to_string(input_dim_) + "], got " +
                        shape_string(encoder_row.shape()));
  }
  const int previous = state.position == 0 ? static_cast<int>(config_.labels) : prev_labels.back();
  if (previous < 0 || previous > static_cast<int>(config_.labels)) {
    throw ContractError("lasertagger_step: previous label " + std::to_string(previous) + " out of range");
  }
  auto x = embed_inputs(std::span<const int>(&previous, 1), state.position);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const auto a = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
    state.keys[l].push_back(matmul(a, layer.key));
    state.values[l].push_back(add_row_vector(matmul(a, layer.value), layer.value_bias));
    const auto q = add_row_vector(matmul(a, layer.query), layer.query_bias);
    const auto& ks = state.keys[l];
    const auto& vs = state.values[l];
    const auto k = ks.size() == 1 ? ks.front() : concat(std::span<const Tensor>(ks), 0);
    const auto v = vs.size() == 1 ? vs.front() : concat(std::span<const Tensor>(vs), 0);
    x = feedforward(layer, add(x, attend(layer, q, k, v, false)));
  }
  ++state.position;
  return readout(x, encoder_row);
}

template <typename T>
Tensor<T> LaserTagger<T>::decode_train(const Tensor& encoder_out, std::span<const int> gold, double rate, Rng& rng,
                                       std::vector<int>* fed) const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError("lasertagger: teacher-forcing rate outside [0, 1]");
  const std::size_t steps = encoder_out.dim(0);
  require_labels(gold, steps, config_.labels, "lasertagger");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto state = start();
  std::vector<int> previous;
  std::vector<Tensor> rows;
  rows.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    rows.push_back(step(row(encoder_out, i), previous, state));
    const bool forced = unit(rng) < rate;
    previous.push_back(forced ? gold[i] : argmax_row(rows.back(), 0));
  }
  if (fed) *fed = previous;
  if (rows.empty()) return Tensor::zeros({0, config_.labels});
  return rows.size() == 1 ? rows.front() : concat(std::span<const Tensor>(rows), 0);
}

template <typename T>
Tensor<T> LaserTagger<T>::train_sequence(const Tensor& encoder_out, std::span<const int> gold, double rate, Rng& rng,
                                         double label_smoothing) const {
  const auto logits = decode_train(encoder_out, gold, rate, rng);
  return cross_entropy_label_smoothed(logits, gold, label_smoothing);
}

template <typename T>
Tensor<T> LaserTagger<T>::forced_logits(const Tensor& encoder_out, std::span<const int> gold) const {
  const std::size_t steps = encoder_out.dim(0);
  require_labels(gold, steps, config_.labels, "lasertagger");
  std::vector<int> previous{static_cast<int>(config_.labels)};
  previous.insert(previous.end(), gold.begin(), gold.end());
  previous.pop_back();
  auto x = embed_inputs(previous, 0);
  for (const auto& layer : layers_) {
    const auto a = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
    const auto q = add_row_vector(matmul(a, layer.query), layer.query_bias);
    const auto k = matmul(a, layer.key);
    const auto v = add_row_vector(matmul(a, layer.value), layer.value_bias);
    x = feedforward(layer, add(x, attend(layer, q, k, v, true)));
  }
  return readout(x, encoder_out);
}

template <typename T>
std::vector<int> LaserTagger<T>::infer(const Tensor& encoder_out) const {
  NoGradGuard guard;
  const std::size_t steps = encoder_out.rank() == 2 ? encoder_out.dim(0) : 0;
  auto state = start();
  std::vector<int> labels;
  labels.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto logits = step(row(encoder_out, i), labels, state);
    labels.push_back(argmax_row(logits, 0));
  }
  return labels;
}

// ---- BiLSTM ----

template <typename T>
BiLstm<T>::BiLstm(std::size_t vocab_size, std::size_t embedding_dim, std::size_t hidden_dim, double init_std,
                  Rng& rng)
    : vocab_size_(vocab_size), hidden_dim_(hidden_dim) {
  embedding_ = normal_parameter<T>({vocab_size, embedding_dim}, init_std, rng);
  for (Direction* d : {&forward_, &backward_}) {
    d->input = normal_parameter<T>({embedding_dim, 4 * hidden_dim}, init_std, rng);
    d->recurrent = normal_parameter<T>({hidden_dim, 4 * hidden_dim}, init_std, rng);
    std::vector<T> bias(4 * hidden_dim, T{0});
    for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) bias[j] = T{1};  // forget gate
    d->bias = Tensor::parameter({4 * hidden_dim}, std::move(bias));
  }
}

template <typename T>
ParameterList<T> BiLstm<T>::parameters(const std::string& prefix) const {
  return {{prefix + "embedding", embedding_},
          {prefix + "forward.input", forward_.input},
          {prefix + "forward.recurrent", forward_.recurrent},
          {prefix + "forward.bias", forward_.bias},
          {prefix + "backward.input", backward_.input},
          {prefix + "backward.recurrent", backward_.recurrent},
          {prefix + "backward.bias", backward_.bias}};
}

template <typename T>
Tensor<T> BiLstm<T>::run(const Direction& d, const Tensor& projected, bool reverse) const {
  const std::size_t steps = projected.dim(0), h = hidden_dim_;
  auto state = Tensor::zeros({1, h});
  auto cell = Tensor::zeros({1, h});
  std::vector<Tensor> outputs(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    const auto gates = add(row(projected, t), matmul(state, d.recurrent));
    const auto input_gate = sigmoid(slice(gates, 1, 0, h));
    const auto forget_gate = sigmoid(slice(gates, 1, h, 2 * h));
    const auto candidate = tanh(slice(gates, 1, 2 * h, 3 * h));
    const auto output_gate = sigmoid(slice(gates, 1, 3 * h, 4 * h));
    cell = add(mul(forget_gate, cell), mul(input_gate, candidate));
    state = mul(output_gate, tanh(cell));
    outputs[t] = state;
  }
  return steps == 1 ? outputs.front() : concat(std::span<const Tensor>(outputs), 0);
}

template <typename T>
Tensor<T> BiLstm<T>::features(std::span<const int> ids, double dropout_rate, Rng* dropout_rng) const {
  if (ids.empty()) throw ContractError("bilstm: empty sequence");
  auto x = embedding_lookup(embedding_, ids);
  if (dropout_rng && dropout_rate > 0.0) x = dropout(x, dropout_rate, *dropout_rng);
  const auto fwd = run(forward_, add_row_vector(matmul(x, forward_.input), forward_.bias), false);
  const auto bwd = run(backward_, add_row_vector(matmul(x, backward_.input), backward_.bias), true);
  return concat<T>({fwd, bwd}, 1);
}

#define PROPSPAN_INSTANTIATE_HEADS(T)                                                              \
  template int argmax_row<T>(const Tensor<T>&, std::size_t);                                       \
  template class LinearHead<T>;                                                                    \
  template struct CrfParams<T>;                                                                    \
  template T crf_path_score<T>(const Tensor<T>&, std::span<const int>, const CrfParams<T>&);        \
  template Tensor<T> crf_nll<T>(const Tensor<T>&, std::span<const int>, const CrfParams<T>&);       \
  template std::vector<int> crf_viterbi<T>(const Tensor<T>&, const CrfParams<T>&);                 \
  template class LaserTagger<T>;                                                                   \
  template class BiLstm<T>;

PROPSPAN_INSTANTIATE_HEADS(float)
PROPSPAN_INSTANTIATE_HEADS(double)
PROPSPAN_INSTANTIATE_HEADS(long double)

}  // namespace propspan::si
