#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "propspan/autograd/optimizer.hpp"
#include "propspan/corpus/types.hpp"
#include "propspan/corpus/vocabulary.hpp"
#include "propspan/eval/scoring.hpp"
#include "propspan/si/model.hpp"

namespace propspan::si {

/// One encoder input: a sentence (or a piece of a long one) with ids and tags.
struct SiExample {
  std::size_t article_index = 0;
  corpus::Sentence sentence;
  std::vector<int> ids;
  std::vector<int> tags;
};

struct SiCorpus {
  std::vector<corpus::Article> articles;
  std::vector<SiExample> examples;
  /// Gold spans as given, used for scoring.
  std::vector<corpus::SpanAnnotation> gold;
};

/// Splits articles into sentences, tags tokens from `gold` and cuts sentences
/// longer than `max_tokens` into consecutive pieces.
SiCorpus make_si_corpus(std::vector<corpus::Article> articles, std::vector<corpus::SpanAnnotation> gold,
                        const corpus::Vocabulary& vocabulary, std::size_t max_tokens);

struct SiTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  ag::AdamConfig adam{};
  std::uint64_t seed = 13;
};

struct SiEpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SiTrainResult {
  SiModel<float> model;
  std::vector<SiEpochMetrics> history;
};

/// Trains encoder and head end to end. Teacher forcing follows tf_rate over all
/// optimizer updates. After every epoch the model is scored on `dev` (the
/// training corpus when `dev` is null) and a row goes to `metrics` when given.
SiTrainResult train_si(const SiModelConfig& config, const SiCorpus& train, const SiCorpus* dev,
                       const SiTrainOptions& options, std::ostream* metrics = nullptr);

/// Tags per example, postprocessed when the model's config asks for it.
std::vector<corpus::TagSequence> predict_si_tags(const SiModel<float>& model, const SiCorpus& data);
/// Predicted spans per article, merged across whitespace gaps.
std::vector<corpus::SpanAnnotation> predict_si_spans(const SiModel<float>& model, const SiCorpus& data);
/// Share of tokens whose predicted tag equals the gold tag.
double token_accuracy(const SiModel<float>& model, const SiCorpus& data);

eval::ScoreReport evaluate_si(const SiModel<float>& model, const SiCorpus& data);

void write_si_metrics_header(std::ostream& out);
void write_si_metrics_row(std::ostream& out, const SiEpochMetrics& row);

}  // namespace propspan::si
