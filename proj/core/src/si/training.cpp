#include "propspan/si/training.hpp"

#include <cstdio>
#include <map>
#include <ostream>

#include "propspan/autograd/training.hpp"
#include "propspan/corpus/text.hpp"

namespace propspan::si {

using namespace propspan::ag;
using corpus::Article;
using corpus::Sentence;
using corpus::SpanAnnotation;

SiCorpus make_si_corpus(std::vector<Article> articles, std::vector<SpanAnnotation> gold,
                        const corpus::Vocabulary& vocabulary, std::size_t max_tokens) {
  if (max_tokens == 0) throw ContractError("make_si_corpus: max_tokens must be positive");
  SiCorpus out;
  out.articles = std::move(articles);
  out.gold = std::move(gold);
  std::map<std::string, std::vector<SpanAnnotation>> spans_by_article;
  for (const auto& s : out.gold) spans_by_article[s.article_id].push_back(s);
  for (std::size_t a = 0; a < out.articles.size(); ++a) {
    const auto& article = out.articles[a];
    const auto sentences = corpus::split_sentences(article);
    const auto& spans = spans_by_article[article.id];
    for (const auto& sentence : corpus::project_spans_to_tags(article, sentences, spans)) {
      for (std::size_t from = 0; from < sentence.tokens.size(); from += max_tokens) {
        const std::size_t to = std::min(sentence.tokens.size(), from + max_tokens);
        SiExample example;
        example.article_index = a;
        example.sentence.article_id = article.id;
        example.sentence.tokens.assign(sentence.tokens.begin() + static_cast<std::ptrdiff_t>(from),
                                       sentence.tokens.begin() + static_cast<std::ptrdiff_t>(to));
        example.sentence.begin = example.sentence.tokens.front().begin;
        example.sentence.end = example.sentence.tokens.back().end;
        example.tags.assign(sentence.tags->begin() + static_cast<std::ptrdiff_t>(from),
                            sentence.tags->begin() + static_cast<std::ptrdiff_t>(to));
        example.sentence.tags = example.tags;
        example.ids = vocabulary.encode(example.sentence.tokens);
        out.examples.push_back(std::move(example));
      }
    }
  }
  return out;
}

std::vector<corpus::TagSequence> predict_si_tags(const SiModel<float>& model, const SiCorpus& data) {
  std::vector<corpus::TagSequence> out;
  out.reserve(data.examples.size());
  for (const auto& example : data.examples) out.push_back(model.predict_tags(example.ids));
  return out;
}

std::vector<SpanAnnotation> predict_si_spans(const SiModel<float>& model, const SiCorpus& data) {
  const auto tags = predict_si_tags(model, data);
  std::vector<SpanAnnotation> out;
  std::size_t i = 0;
  for (std::size_t a = 0; a < data.articles.size(); ++a) {
    std::vector<Sentence> sentences;
    std::vector<corpus::TagSequence> article_tags;
    for (; i < data.examples.size() && data.examples[i].article_index == a; ++i) {
      sentences.push_back(data.examples[i].sentence);
      article_tags.push_back(tags[i]);
    }
    const auto spans = corpus::article_tags_to_spans(data.articles[a], sentences, article_tags);
    out.insert(out.end(), spans.begin(), spans.end());
  }
  return out;
}

double token_accuracy(const SiModel<float>& model, const SiCorpus& data) {
  std::size_t correct = 0, total = 0;
  const auto tags = predict_si_tags(model, data);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    for (std::size_t t = 0; t < tags[i].size(); ++t) correct += tags[i][t] == data.examples[i].tags[t];
    total += tags[i].size();
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0;
}

eval::ScoreReport evaluate_si(const SiModel<float>& model, const SiCorpus& data) {
  const auto predicted = predict_si_spans(model, data);
  return eval::si_score(predicted, data.gold);
}

SiTrainResult train_si(const SiModelConfig& config, const SiCorpus& train, const SiCorpus* dev,
                       const SiTrainOptions& options, std::ostream* metrics) {
  if (train.examples.empty()) throw ContractError("train_si: empty training set");
  Rng init(options.seed);
  SiTrainResult result{SiModel<float>(config, init), {}};
  const auto& model = result.model;
  const double tf_start = config.tagger.tf_start, tf_end = config.tagger.tf_end;
  if (metrics) write_si_metrics_header(*metrics);

  TrainLoopOptions loop{options.epochs, options.batch_size, options.adam, options.seed + 1};
  train_loop<float>(
      train.examples.size(), model.parameters(), loop,
      [&](std::size_t index, const ExampleContext& context) {
        const auto& example = train.examples[index];
        const double rate = tf_rate(context.update, context.total_updates, tf_start, tf_end);
        return model.loss(example.ids, example.tags, rate, context.rng);
      },
      [&](std::size_t epoch, double loss) {
        const auto report = evaluate_si(model, dev ? *dev : train);
        SiEpochMetrics row{epoch + 1, loss, report.precision, report.recall, report.f1};
        result.history.push_back(row);
        if (metrics) write_si_metrics_row(*metrics, row);
      });
  return result;
}

void write_si_metrics_header(std::ostream& out) { out << "epoch\tloss\tprecision\trecall\tf1\n"; }

void write_si_metrics_row(std::ostream& out, const SiEpochMetrics& row) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, "%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", row.epoch, row.loss, row.precision, row.recall,
                row.f1);
  out << buffer;
}

}  // namespace propspan::si
