#include "propspan/si/model.hpp"

#include "propspan/autograd/losses.hpp"

namespace propspan::si {

using namespace propspan::ag;

const char* head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::linear: return "linear";
    case HeadKind::crf: return "crf";
    case HeadKind::lasertagger: return "lasertagger";
    case HeadKind::bilstm: return "bilstm";
  }
  return "?";
}

HeadKind parse_head_kind(const std::string& name) {
  for (auto kind : {HeadKind::linear, HeadKind::crf, HeadKind::lasertagger, HeadKind::bilstm}) {
    if (name == head_kind_name(kind)) return kind;
  }
  throw ValidationError("unknown head kind '" + name + "' (expected linear, crf, lasertagger or bilstm)");
}

void TaggerConfig::validate() const {
  std::vector<std::string> problems;
  if (labels < 2) problems.push_back("labels must be at least 2");
  if (!(tf_start >= 0.0 && tf_start <= 1.0)) problems.push_back("tf_start must lie in [0, 1]");
  if (!(tf_end >= 0.0 && tf_end <= 1.0)) problems.push_back("tf_end must lie in [0, 1]");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) problems.push_back("label_smoothing must lie in [0, 1)");
  if (head == HeadKind::lasertagger) {
    if (decoder.layers == 0) problems.push_back("decoder layers must be positive");
    if (decoder.heads == 0 || decoder.hidden_dim % decoder.heads != 0) {
      problems.push_back("decoder hidden_dim must be divisible by decoder heads");
    }
    if (decoder.labels != labels) problems.push_back("decoder labels must equal labels");
  }
  if (head == HeadKind::bilstm && lstm_hidden == 0) problems.push_back("lstm_hidden must be positive");
  if (problems.empty()) return;
  std::string message = "tagger config:";
  for (const auto& p : problems) message += " " + p + ";";
  message.pop_back();
  throw ValidationError(message);
}

template <typename T>
SiModel<T>::SiModel(SiModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.encoder.validate();
  config_.tagger.validate();
  const auto& enc = config_.encoder;
  const auto& tag = config_.tagger;
  std::size_t feature_dim = enc.hidden_dim;
  if (tag.head == HeadKind::bilstm) {
    lstm_.emplace(enc.vocab_size, enc.hidden_dim, tag.lstm_hidden, enc.init_std, rng);
    feature_dim = lstm_->output_dim();
  } else {
    encoder_.emplace(enc, rng);
  }
  switch (tag.head) {
    case HeadKind::linear:
    case HeadKind::bilstm:
      linear_.emplace(feature_dim, tag.labels, enc.init_std, rng);
      break;
    case HeadKind::crf:
      linear_.emplace(feature_dim, tag.labels, enc.init_std, rng);
      crf_.emplace(CrfParams<T>::zeros(tag.labels));
      break;
    case HeadKind::lasertagger:
      decoder_.emplace(tag.decoder, feature_dim, enc.init_std, rng);
      break;
  }
}

template <typename T>
ParameterList<T> SiModel<T>::parameters() const {
  ParameterList<T> out;
  auto append = [&out](ParameterList<T> more) { out.insert(out.end(), more.begin(), more.end()); };
  if (encoder_) append(encoder_->parameters());
  if (lstm_) append(lstm_->parameters("lstm."));
  if (linear_) append(linear_->parameters("head.linear."));
  if (crf_) append(crf_->parameters("head.crf."));
  if (decoder_) append(decoder_->parameters("head.decoder."));
  return out;
}

template <typename T>
Tensor<T> SiModel<T>::features(std::span<const int> ids, Rng* dropout_rng) const {
  if (lstm_) return lstm_->features(ids, config_.encoder.dropout, dropout_rng);
  return encoder_->encode(ids, dropout_rng);
}

template <typename T>
Tensor<T> SiModel<T>::loss(std::span<const int> ids, std::span<const int> gold, double teacher_forcing,
                           Rng* rng) const {
  if (ids.size() != gold.size()) {
    throw ContractError("si loss: " + std::to_string(ids.size()) + " tokens but " + std::to_string(gold.size()) +
                        " tags");
  }
  const auto e = features(ids, rng);
  const double eps = config_.tagger.label_smoothing;
  if (decoder_) {
    if (rng) return decoder_->train_sequence(e, gold, teacher_forcing, *rng, eps);
    return cross_entropy_label_smoothed(decoder_->forced_logits(e, gold), gold, eps);
  }
  const auto emissions = linear_->logits(e);
  if (crf_) return crf_nll(emissions, gold, *crf_);
  return cross_entropy_label_smoothed(emissions, gold, eps);
}

template <typename T>
std::vector<int> SiModel<T>::predict(std::span<const int> ids) const {
  if (ids.empty()) return {};
  NoGradGuard guard;
  const auto e = features(ids);
  if (decoder_) return decoder_->infer(e);
  const auto emissions = linear_->logits(e);
  if (crf_) return crf_viterbi(emissions, *crf_);
  std::vector<int> tags(ids.size());
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = argmax_row(emissions, i);
  return tags;
}

template <typename T>
std::vector<int> SiModel<T>::predict_tags(std::span<const int> ids) const {
  auto tags = predict(ids);
  if (config_.tagger.postprocess && config_.tagger.labels == 2) tags = postprocess_fill(tags);
  return tags;
}

template class SiModel<float>;
template class SiModel<double>;
template class SiModel<long double>;

}  // namespace propspan::si
