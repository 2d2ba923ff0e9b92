#include "propspan/tc/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "propspan/autograd/losses.hpp"
#include "propspan/autograd/training.hpp"
#include "propspan/corpus/io.hpp"
#include "propspan/corpus/vocabulary.hpp"

namespace propspan::tc {

using namespace propspan::ag;
using corpus::SpanAnnotation;
using corpus::TcSample;

const char* pooling_name(Pooling pooling) {
  switch (pooling) {
    case Pooling::cls: return "cls";
    case Pooling::mean: return "mean";
    case Pooling::weighted: return "weighted";
  }
  return "?";
}

Pooling parse_pooling(const std::string& name) {
  for (auto p : {Pooling::cls, Pooling::mean, Pooling::weighted}) {
    if (name == pooling_name(p)) return p;
  }
  throw ValidationError("unknown pooling '" + name + "' (expected cls, mean or weighted)");
}

template <typename T>
Tensor<T> pool_mean(const Tensor<T>& rows) {
  if (rows.rank() != 2 || rows.dim(0) == 0) throw ContractError("pool_mean: empty span");
  const std::size_t k = rows.dim(0);
  const auto ones = Tensor<T>::constant({1, k}, std::vector<T>(k, T{1}));
  return scale(matmul(ones, rows), T{1} / static_cast<T>(k));
}

template <typename T>
Tensor<T> pool_weighted(const Tensor<T>& rows, const Tensor<T>& w, const Tensor<T>& b, std::vector<double>* alpha) {
  if (rows.rank() != 2 || rows.dim(0) == 0) throw ContractError("pool_weighted: empty span");
  const auto weights = softmax(add_row_vector(matmul(rows, w), b), 0);
  if (alpha) alpha->assign(weights.values().begin(), weights.values().end());
  return matmul(transpose(weights), rows);
}

std::vector<std::size_t> decide_labels(std::span<const double> probabilities, DecisionMode mode, double threshold) {
  if (probabilities.empty()) return {};
  std::size_t best = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k) {
    if (probabilities[k] > probabilities[best]) best = k;
  }
  if (mode == DecisionMode::single) return {best};
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] >= threshold) chosen.push_back(k);
  }
  if (chosen.empty()) chosen.push_back(best);
  return chosen;
}

std::vector<std::size_t> output_classes(std::span<const double> probabilities, std::size_t count, DecisionMode mode,
                                        double threshold) {
  auto by_probability = [&](std::size_t a, std::size_t b) {
    return probabilities[a] != probabilities[b] ? probabilities[a] > probabilities[b] : a < b;
  };
  auto decided = decide_labels(probabilities, mode, threshold);
  std::sort(decided.begin(), decided.end(), by_probability);
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (std::find(decided.begin(), decided.end(), k) == decided.end()) rest.push_back(k);
  }
  std::sort(rest.begin(), rest.end(), by_probability);
  decided.insert(decided.end(), rest.begin(), rest.end());
  decided.resize(std::min(count, decided.size()));
  return decided;
}

void TcModelConfig::validate() const {
  encoder.validate();
  if (labels == 0) throw ValidationError("tc config: labels must be positive");
  if (!class_weights.empty() && class_weights.size() != labels) {
    throw ValidationError("tc config: class_weights has " + std::to_string(class_weights.size()) +
                          " entries for " + std::to_string(labels) + " labels");
  }
}

TcInput make_tc_input(const TcSample& sample, std::size_t max_positions) {
  const std::size_t n = sample.token_ids.size();
  if (sample.span_tokens.empty() || sample.span_tokens.begin == 0 || sample.span_tokens.end >= n) {
    throw ContractError("tc input: span of " + sample.article_id + " is not enclosed by markers");
  }
  const std::size_t left_marker = sample.span_tokens.begin - 1, right_marker = sample.span_tokens.end;
  const std::size_t needed = right_marker - left_marker + 2;  // classifier token, markers and span
  if (needed > max_positions) {
    throw AlignmentError("tc input: span " + sample.article_id + ":" + std::to_string(sample.begin) + "-" +
                         std::to_string(sample.end) + " needs " + std::to_string(needed) +
                         " positions, max_positions is " + std::to_string(max_positions));
  }
  const std::size_t left = left_marker, right = n - 1 - right_marker;
  const std::size_t budget = max_positions - needed;
  std::size_t keep_left = std::min(left, (budget + 1) / 2);
  const std::size_t keep_right = std::min(right, budget - keep_left);
  keep_left = std::min(left, budget - keep_right);

  TcInput input;
  input.ids.push_back(corpus::Vocabulary::kClassifier);
  const std::size_t from = left_marker - keep_left, to = right_marker + 1 + keep_right;
  input.ids.insert(input.ids.end(), sample.token_ids.begin() + static_cast<std::ptrdiff_t>(from),
                   sample.token_ids.begin() + static_cast<std::ptrdiff_t>(to));
  input.span = {sample.span_tokens.begin - from + 1, sample.span_tokens.end - from + 1};
  return input;
}

template <typename T>
TcModel<T>::TcModel(TcModelConfig config, Rng& rng)
    : config_((config.validate(), std::move(config))), encoder_(config_.encoder, rng) {
  const std::size_t n = config_.encoder.hidden_dim;
  pool_w_ = normal_parameter<T>({n, 1}, config_.encoder.init_std, rng);
  // The pooled output does not depend on b, so it gets no gradient and stays a constant.
  pool_b_ = Tensor::constant({1}, {T{0}});
  const std::size_t input = config_.pooling == Pooling::cls ? n : 2 * n;
  output_ = normal_parameter<T>({input, config_.labels}, config_.encoder.init_std, rng);
  output_bias_ = constant_parameter<T>({config_.labels}, 0.0);
}

template <typename T>
ParameterList<T> TcModel<T>::parameters() const {
  auto out = encoder_.parameters();
  if (config_.pooling == Pooling::weighted) {
    out.push_back({"head.pool.w", pool_w_});
  }
  out.push_back({"head.output", output_});
  out.push_back({"head.output_bias", output_bias_});
  return out;
}

template <typename T>
Tensor<T> TcModel<T>::logits(const TcSample& sample, Rng* dropout_rng) const {
  const auto input = make_tc_input(sample, config_.encoder.max_positions);
  const auto e = encoder_.encode(input.ids, dropout_rng);
  const auto cls = row(e, 0);
  Tensor features = cls;
  if (config_.pooling != Pooling::cls) {
    const auto span_rows = slice(e, 0, input.span.begin, input.span.end);
    const auto pooled = config_.pooling == Pooling::mean ? pool_mean(span_rows) : pool_weighted(span_rows, pool_w_, pool_b_);
    features = concat<T>({cls, pooled}, 1);
  }
  return add_row_vector(matmul(features, output_), output_bias_);
}

template <typename T>
Tensor<T> TcModel<T>::loss(const TcSample& sample, Rng* dropout_rng) const {
  if (sample.labels.size() != config_.labels) {
    throw ContractError("tc loss: sample has " + std::to_string(sample.labels.size()) + " labels, model has " +
                        std::to_string(config_.labels));
  }
  const auto l = logits(sample, dropout_rng);
  return binary_cross_entropy_multilabel(reshape(l, {config_.labels}), sample.labels, config_.class_weights);
}

template <typename T>
std::vector<double> TcModel<T>::classify(const TcSample& sample) const {
  NoGradGuard guard;
  const auto l = logits(sample);
  std::vector<double> out;
  out.reserve(l.size());
  for (T v : l.values()) out.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  return out;
}

PredictionSet predict_tc(const TcModel<float>& model, std::span<const TcSample> samples) {
  PredictionSet set;
  for (const auto& s : samples) {
    set.identities.push_back({s.article_id, s.begin, s.end});
    set.probabilities.push_back(model.classify(s));
  }
  return set;
}

PredictionSet ensemble(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw ContractError("ensemble: no prediction sets");
  const auto& first = sets.front();
  for (std::size_t m = 0; m < sets.size(); ++m) {
    const auto& s = sets[m];
    if (s.identities.size() != s.probabilities.size()) {
      throw ContractError("ensemble: set " + std::to_string(m) + " has mismatched rows");
    }
    if (s.identities != first.identities) {
      throw ContractError("ensemble: set " + std::to_string(m) + " lists different samples than set 0");
    }
    for (std::size_t i = 0; i < s.probabilities.size(); ++i) {
      if (s.probabilities[i].size() != first.probabilities[i].size()) {
        throw ContractError("ensemble: set " + std::to_string(m) + " has a different class count at row " +
                            std::to_string(i + 1));
      }
    }
  }
  PredictionSet out;
  out.identities = first.identities;
  std::vector<double> column(sets.size());
  for (std::size_t i = 0; i < first.probabilities.size(); ++i) {
    std::vector<double> mean(first.probabilities[i].size());
    for (std::size_t k = 0; k < mean.size(); ++k) {
      for (std::size_t m = 0; m < sets.size(); ++m) column[m] = sets[m].probabilities[i][k];
      std::sort(column.begin(), column.end());
      mean[k] = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(sets.size());
    }
    out.probabilities.push_back(std::move(mean));
  }
  return out;
}

std::vector<SpanAnnotation> prediction_rows(const PredictionSet& set, const corpus::LabelSet& labels, DecisionMode mode,
                                            std::span<const std::size_t> row_counts, double threshold) {
  if (!row_counts.empty() && row_counts.size() != set.identities.size()) {
    throw ContractError("prediction_rows: row counts do not match the samples");
  }
  std::vector<SpanAnnotation> rows;
  for (std::size_t i = 0; i < set.identities.size(); ++i) {
    const auto& probabilities = set.probabilities[i];
    if (probabilities.size() != labels.size()) {
      throw ContractError("prediction_rows: " + std::to_string(probabilities.size()) + " probabilities for " +
                          std::to_string(labels.size()) + " labels");
    }
    const std::size_t count = row_counts.empty() ? 1 : std::max<std::size_t>(1, row_counts[i]);
    const auto& id = set.identities[i];
    const auto classes = output_classes(probabilities, count, mode, threshold);
    for (std::size_t r = 0; r < count; ++r) {
      rows.push_back({id.article_id, id.begin, id.end, labels.name(classes[std::min(r, classes.size() - 1)])});
    }
  }
  return rows;
}

std::vector<SpanAnnotation> gold_rows(std::span<const TcSample> samples, const corpus::LabelSet& labels) {
  std::vector<SpanAnnotation> rows;
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < s.labels.size(); ++k) {
      if (s.labels[k]) rows.push_back({s.article_id, s.begin, s.end, labels.name(k)});
    }
  }
  return rows;
}

void write_probabilities(std::ostream& out, const PredictionSet& set) {
  char buffer[40];
  for (std::size_t i = 0; i < set.identities.size(); ++i) {
    const auto& id = set.identities[i];
    out << id.article_id << '\t' << id.begin << '\t' << id.end;
    for (double p : set.probabilities[i]) {
      std::snprintf(buffer, sizeof buffer, "%.17g", p);
      out << '\t' << buffer;
    }
    out << '\n';
  }
}

void write_probabilities(const std::filesystem::path& path, const PredictionSet& set) {
  std::ostringstream out;
  write_probabilities(out, set);
  corpus::write_file(path, out.str());
}

PredictionSet read_probabilities(std::istream& in, const std::string& source) {
  PredictionSet set;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, '\t');) fields.push_back(field);
    auto fail = [&](const std::string& what) {
      throw FormatError(source + ": " + what + " at line " + std::to_string(number));
    };
    if (fields.size() < 4) fail("expected id, begin, end and at least one probability");
    SampleIdentity id{fields[0], 0, 0};
    auto parse_offset = [&](const std::string& s, corpus::Offset& value) {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad offset '" + s + "'");
    };
    parse_offset(fields[1], id.begin);
    parse_offset(fields[2], id.end);
    std::vector<double> probabilities;
    for (std::size_t f = 3; f < fields.size(); ++f) {
      char* end = nullptr;
      const double p = std::strtod(fields[f].c_str(), &end);
      if (end != fields[f].c_str() + fields[f].size() || !(p >= 0.0 && p <= 1.0)) {
        fail("bad probability '" + fields[f] + "'");
      }
      probabilities.push_back(p);
    }
    if (!set.probabilities.empty() && probabilities.size() != set.probabilities.front().size()) {
      fail("class count differs from the first row");
    }
    set.identities.push_back(std::move(id));
    set.probabilities.push_back(std::move(probabilities));
  }
  return set;
}

PredictionSet read_probabilities(const std::filesystem::path& path) {
  std::istringstream in(corpus::read_file(path));
  return read_probabilities(in, path.string());
}

eval::ScoreReport evaluate_tc(const TcModel<float>& model, std::span<const TcSample> samples,
                              const corpus::LabelSet& labels, DecisionMode mode) {
  std::vector<std::size_t> counts;
  for (const auto& s : samples) counts.push_back(s.row_count);
  const auto predicted = prediction_rows(predict_tc(model, samples), labels, mode, counts);
  const auto gold = gold_rows(samples, labels);
  return eval::tc_micro_f(predicted, gold, labels.names());
}

TcTrainResult train_tc(const TcModelConfig& config, const std::vector<TcSample>& train,
                       const std::vector<TcSample>* dev, const corpus::LabelSet& labels,
                       const TcTrainOptions& options, std::ostream* metrics) {
  if (train.empty()) throw ContractError("train_tc: empty training set");
  if (labels.size() != config.labels) throw ContractError("train_tc: label set size differs from the model config");
  Rng init(options.seed);
  TcTrainResult result{TcModel<float>(config, init), {}};
  auto& model = result.model;

  if (options.mlm_epochs > 0) {
    auto sequences = options.mlm_corpus;
    if (sequences.empty()) {
      for (const auto& s : train) {
        std::vector<int> ids;
        for (int id : s.token_ids) {
          if (id != corpus::Vocabulary::kMarker) ids.push_back(id);
        }
        ids.resize(std::min(ids.size(), config.encoder.max_positions));
        sequences.push_back(std::move(ids));
      }
    }
    auto mlm = options.mlm;
    mlm.epochs = options.mlm_epochs;
    mlm.seed = options.seed + 2;
    encoder::mlm_pretrain(model.encoder(), sequences, mlm);
  }

  if (metrics) write_tc_metrics_header(*metrics);
  TrainLoopOptions loop{options.epochs, options.batch_size, options.adam, options.seed + 1};
  train_loop<float>(
      train.size(), model.parameters(), loop,
      [&](std::size_t index, const ExampleContext& context) { return model.loss(train[index], context.rng); },
      [&](std::size_t epoch, double loss) {
        const auto report = evaluate_tc(model, dev ? *dev : train, labels, options.decision);
        TcEpochMetrics row{epoch + 1, loss, report.precision, report.recall, report.f1};
        result.history.push_back(row);
        if (metrics) write_tc_metrics_row(*metrics, row);
      });
  return result;
}

void write_tc_metrics_header(std::ostream& out) { out << "epoch\tloss\tprecision\trecall\tf1\n"; }

void write_tc_metrics_row(std::ostream& out, const TcEpochMetrics& row) {
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, "%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", row.epoch, row.loss, row.precision, row.recall,
                row.f1);
  out << buffer;
}

#define PROPSPAN_INSTANTIATE_TC(T)                                                                          \
  template Tensor<T> pool_mean<T>(const Tensor<T>&);                                                        \
  template Tensor<T> pool_weighted<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::vector<double>*); \
  template class TcModel<T>;

PROPSPAN_INSTANTIATE_TC(float)
PROPSPAN_INSTANTIATE_TC(double)
PROPSPAN_INSTANTIATE_TC(long double)

}  // namespace propspan::tc
