#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "propspan/encoder/encoder.hpp"
#include "propspan/si/heads.hpp"

namespace propspan::si {

enum class HeadKind { linear, crf, lasertagger, bilstm };

const char* head_kind_name(HeadKind kind);
/// Throws ValidationError for unknown names.
HeadKind parse_head_kind(const std::string& name);

struct TaggerConfig {
  HeadKind head = HeadKind::lasertagger;
  std::size_t labels = 2;
  DecoderConfig decoder{};
  /// Teacher-forcing rate at the first and at the last update.
  double tf_start = 1.0;
  double tf_end = 0.0;
  double label_smoothing = 0.0;
  /// Applies postprocess_fill to predictions.
  bool postprocess = false;
  /// Hidden size per direction of the recurrent baseline.
  std::size_t lstm_hidden = 64;

  /// Throws ValidationError listing every violated constraint.
  void validate() const;
};

struct SiModelConfig {
  encoder::EncoderConfig encoder{};
  TaggerConfig tagger{};
};

/// Encoder plus span-identification head. The recurrent baseline replaces the
/// encoder with a BiLSTM over its own embeddings of size encoder.hidden_dim.
template <typename T>
class SiModel {
 public:
  using Tensor = ag::Tensor<T>;

  SiModel(SiModelConfig config, ag::Rng& rng);

  const SiModelConfig& config() const { return config_; }
  ag::ParameterList<T> parameters() const;

  /// Per-token features [T, n]; dropout only when `dropout_rng` is given.
  Tensor features(std::span<const int> ids, ag::Rng* dropout_rng = nullptr) const;

  /// Training loss for one sequence. `rng` drives dropout and teacher-forcing
  /// draws; without it the model runs deterministically with full forcing.
  Tensor loss(std::span<const int> ids, std::span<const int> gold, double teacher_forcing, ag::Rng* rng) const;

  /// Raw predicted tags, before any postprocessing.
  std::vector<int> predict(std::span<const int> ids) const;
  /// predict() followed by postprocess_fill when the config asks for it.
  std::vector<int> predict_tags(std::span<const int> ids) const;

  /// The decoder of a lasertagger head, else null.
  const LaserTagger<T>* decoder() const { return decoder_ ? &*decoder_ : nullptr; }

 private:
  SiModelConfig config_;
  std::optional<encoder::EncoderModel<T>> encoder_;
  std::optional<BiLstm<T>> lstm_;
  std::optional<LinearHead<T>> linear_;
  std::optional<CrfParams<T>> crf_;
  std::optional<LaserTagger<T>> decoder_;
};

extern template class SiModel<float>;
extern template class SiModel<double>;
extern template class SiModel<long double>;

}  // namespace propspan::si
