#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "propspan/autograd/optimizer.hpp"
#include "propspan/corpus/label_set.hpp"
#include "propspan/corpus/tc_samples.hpp"
#include "propspan/encoder/encoder.hpp"
#include "propspan/eval/scoring.hpp"

namespace propspan::tc {

/// cls: classifier-token output only. mean / weighted: span pooling joined
/// with the classifier-token output.
enum class Pooling { cls, mean, weighted };

const char* pooling_name(Pooling pooling);
/// Throws ValidationError for unknown names.
Pooling parse_pooling(const std::string& name);

enum class DecisionMode { multilabel, single };

/// Mean of the rows of e[k, n] -> [1, n]. Throws ContractError when k = 0.
template <typename T>
ag::Tensor<T> pool_mean(const ag::Tensor<T>& rows);

/// sum_j alpha_j e_j with alpha = softmax(e w + b) over rows; w is [n, 1] and
/// b is [1]. The weights go to `alpha` when given.
template <typename T>
ag::Tensor<T> pool_weighted(const ag::Tensor<T>& rows, const ag::Tensor<T>& w, const ag::Tensor<T>& b,
                            std::vector<double>* alpha = nullptr);

/// Classes at or above `threshold` (argmax when none qualifies) in multilabel
/// mode; the argmax in single mode. Ties go to the lower index.
std::vector<std::size_t> decide_labels(std::span<const double> probabilities, DecisionMode mode,
                                       double threshold = 0.5);

/// `count` classes for output rows: the decided labels by descending
/// probability, then the remaining classes in the same order.
std::vector<std::size_t> output_classes(std::span<const double> probabilities, std::size_t count,
                                        DecisionMode mode, double threshold = 0.5);

struct TcModelConfig {
  encoder::EncoderConfig encoder{};
  Pooling pooling = Pooling::weighted;
  std::size_t labels = 14;
  /// Per-class loss weights; empty means uniform.
  std::vector<double> class_weights;

  void validate() const;
};

/// Classifier token + window ids cropped to max_positions around the span.
struct TcInput {
  std::vector<int> ids;
  corpus::IndexRange span;
};

/// Prepends the classifier token and trims context evenly from both sides until
/// the sequence fits. Throws AlignmentError when markers and span alone do not fit.
TcInput make_tc_input(const corpus::TcSample& sample, std::size_t max_positions);

template <typename T>
class TcModel {
 public:
  using Tensor = ag::Tensor<T>;

  TcModel(TcModelConfig config, ag::Rng& rng);

  const TcModelConfig& config() const { return config_; }
  ag::ParameterList<T> parameters() const;
  encoder::EncoderModel<T>& encoder() { return encoder_; }
  const encoder::EncoderModel<T>& encoder() const { return encoder_; }

  /// [1, K] logits.
  Tensor logits(const corpus::TcSample& sample, ag::Rng* dropout_rng = nullptr) const;
  /// Multilabel sigmoid cross-entropy against sample.labels.
  Tensor loss(const corpus::TcSample& sample, ag::Rng* dropout_rng = nullptr) const;
  /// Sigmoid probabilities, one per class.
  std::vector<double> classify(const corpus::TcSample& sample) const;

 private:
  TcModelConfig config_;
  encoder::EncoderModel<T> encoder_;
  Tensor pool_w_, pool_b_;
  Tensor output_, output_bias_;
};

/// Where a probability vector belongs.
struct SampleIdentity {
  std::string article_id;
  corpus::Offset begin = 0;
  corpus::Offset end = 0;
  friend bool operator==(const SampleIdentity&, const SampleIdentity&) = default;
};

struct PredictionSet {
  std::vector<SampleIdentity> identities;
  std::vector<std::vector<double>> probabilities;
};

PredictionSet predict_tc(const TcModel<float>& model, std::span<const corpus::TcSample> samples);

/// Elementwise mean of the probability vectors. Every set must list the same
/// identities in the same order and the same class count (ContractError).
/// Each mean sums the values in sorted order, so the result does not depend on
/// the order of the sets.
PredictionSet ensemble(std::span<const PredictionSet> sets);

/// TC rows: `row_counts[i]` rows for sample i (1 when empty), labeled by output_classes.
std::vector<corpus::SpanAnnotation> prediction_rows(const PredictionSet& set, const corpus::LabelSet& labels,
                                                    DecisionMode mode, std::span<const std::size_t> row_counts = {},
                                                    double threshold = 0.5);

/// One gold row per positive label of each sample.
std::vector<corpus::SpanAnnotation> gold_rows(std::span<const corpus::TcSample> samples,
                                              const corpus::LabelSet& labels);

/// `id\tbegin\tend\tp1...pK`, probabilities printed to round-trip exactly.
void write_probabilities(std::ostream& out, const PredictionSet& set);
void write_probabilities(const std::filesystem::path& path, const PredictionSet& set);
PredictionSet read_probabilities(std::istream& in, const std::string& source = "<stream>");
PredictionSet read_probabilities(const std::filesystem::path& path);

struct TcTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  ag::AdamConfig adam{};
  std::uint64_t seed = 13;
  DecisionMode decision = DecisionMode::multilabel;
  /// In-task masked-LM epochs before supervised training; 0 disables it.
  std::size_t mlm_epochs = 0;
  /// Masked-LM sequences; the samples without markers when empty.
  std::vector<std::vector<int>> mlm_corpus;
  encoder::MlmOptions mlm{};
};

struct TcEpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TcTrainResult {
  TcModel<float> model;
  std::vector<TcEpochMetrics> history;
};

/// Supervised multilabel training, optionally preceded by masked-LM
/// finetuning. Scores micro-F on `dev` (the training samples when null) after
/// every epoch, writing a row to `metrics` when given.
TcTrainResult train_tc(const TcModelConfig& config, const std::vector<corpus::TcSample>& train,
                       const std::vector<corpus::TcSample>* dev, const corpus::LabelSet& labels,
                       const TcTrainOptions& options, std::ostream* metrics = nullptr);

eval::ScoreReport evaluate_tc(const TcModel<float>& model, std::span<const corpus::TcSample> samples,
                              const corpus::LabelSet& labels, DecisionMode mode);

void write_tc_metrics_header(std::ostream& out);
void write_tc_metrics_row(std::ostream& out, const TcEpochMetrics& row);

extern template class TcModel<float>;
extern template class TcModel<double>;
extern template class TcModel<long double>;

}  // namespace propspan::tc
