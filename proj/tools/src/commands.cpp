#include "propspan/cli/commands.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "propspan/autograd/checkpoint.hpp"
#include "propspan/corpus/io.hpp"
#include "propspan/corpus/tc_samples.hpp"
#include "propspan/corpus/text.hpp"
#include "propspan/error.hpp"
#include "propspan/eval/scoring.hpp"
#include "propspan/si/training.hpp"
#include "propspan/tc/classifier.hpp"

namespace propspan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointName = "model.ckpt";
constexpr const char* kMetricsName = "metrics.tsv";

corpus::Vocabulary build_vocabulary(const std::vector<corpus::Article>& articles, std::size_t min_count) {
  std::vector<corpus::Sentence> sentences;
  for (const auto& article : articles) {
    auto split = corpus::split_sentences(article);
    sentences.insert(sentences.end(), std::make_move_iterator(split.begin()), std::make_move_iterator(split.end()));
  }
  return corpus::Vocabulary::build(sentences, min_count);
}

std::string checkpoint_config(const RunConfig& config, const corpus::Vocabulary& vocabulary,
                              const corpus::LabelSet& labels) {
  json root;
  root["run"] = json::parse(run_config_json(config, false));
  root["vocabulary"] = vocabulary.regular_surfaces();
  root["labels"] = labels.names();
  return root.dump(2);
}

si::SiModelConfig si_model_config(const RunConfig& config, std::size_t vocab_size) {
  si::SiModelConfig model{config.encoder, config.tagger};
  model.encoder.vocab_size = vocab_size;
  model.tagger.decoder.max_positions = model.encoder.max_positions;
  return model;
}

tc::TcModelConfig tc_model_config(const RunConfig& config, std::size_t vocab_size, std::size_t labels) {
  tc::TcModelConfig model{config.encoder, config.tc.pooling, labels, config.tc.class_weights};
  model.encoder.vocab_size = vocab_size;
  return model;
}

corpus::LabelSet run_label_set(const RunConfig& config) {
  return config.paths.label_set.empty() ? corpus::LabelSet::default_techniques()
                                        : corpus::LabelSet::load(config.paths.label_set);
}

// Reads SI or TC rows, telling the formats apart by the column count of the first row.
std::vector<corpus::SpanAnnotation> load_any_span_labels(const fs::path& path) {
  const auto text = corpus::read_file(path);
  std::istringstream lines(text);
  std::size_t columns = 0;
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    columns = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), '\t'));
    break;
  }
  std::istringstream in(text);
  return corpus::parse_span_labels(in, columns == 3 ? corpus::LabelMode::si : corpus::LabelMode::tc, path.string());
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + " is required");
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + ": file " + path.string() + " does not exist");
}

void require_dir(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + " is required");
  if (!fs::is_directory(path)) {
    throw ValidationError(std::string(what) + ": directory " + path.string() + " does not exist");
  }
}

void require_output(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string(what) + " is required");
  if (fs::is_directory(path)) throw ValidationError(std::string(what) + ": " + path.string() + " is a directory");
  const auto parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw ValidationError(std::string(what) + ": directory " + parent.string() + " does not exist");
  }
}

void train_si_command(const RunConfig& config, std::ostream& metrics, std::ostream& log) {
  auto articles = corpus::load_articles(config.paths.train_articles);
  auto gold = load_any_span_labels(config.paths.train_labels);
  const auto vocabulary = build_vocabulary(articles, config.vocab_min_count);
  const auto model_config = si_model_config(config, vocabulary.size());
  const auto train = si::make_si_corpus(std::move(articles), std::move(gold), vocabulary, config.encoder.max_positions);
  std::optional<si::SiCorpus> dev;
  if (!config.paths.dev_articles.empty()) {
    dev = si::make_si_corpus(corpus::load_articles(config.paths.dev_articles),
                             load_any_span_labels(config.paths.dev_labels), vocabulary,
                             config.encoder.max_positions);
  }
  log << "si: " << train.examples.size() << " training sequences, vocabulary " << vocabulary.size() << "\n";
  const si::SiTrainOptions options{config.training.epochs, config.training.batch_size, config.training.adam,
                                   config.seed};
  const auto result = si::train_si(model_config, train, dev ? &*dev : nullptr, options, &metrics);
  const auto& last = result.history.back();
  log << "si: epoch " << last.epoch << " loss " << last.loss << " F " << last.f1 << "\n";
  fs::create_directories(config.paths.output_dir);
  ag::save_checkpoint(config.paths.output_dir / kCheckpointName,
                      checkpoint_config(config, vocabulary, corpus::LabelSet{}), result.model.parameters());
}

void train_tc_command(const RunConfig& config, std::ostream& metrics, std::ostream& log) {
  const auto labels = run_label_set(config);
  const auto articles = corpus::load_articles(config.paths.train_articles);
  const auto spans = corpus::load_span_labels(config.paths.train_labels, corpus::LabelMode::tc);
  labels.validate(spans);
  const auto vocabulary = build_vocabulary(articles, config.vocab_min_count);
  const auto train = corpus::build_tc_dataset(articles, spans, vocabulary, labels);
  std::optional<std::vector<corpus::TcSample>> dev;
  if (!config.paths.dev_articles.empty()) {
    const auto dev_articles = corpus::load_articles(config.paths.dev_articles);
    const auto dev_spans = corpus::load_span_labels(config.paths.dev_labels, corpus::LabelMode::tc);
    labels.validate(dev_spans);
    dev = corpus::build_tc_dataset(dev_articles, dev_spans, vocabulary, labels);
  }
  log << "tc: " << train.size() << " training spans, " << labels.size() << " classes, vocabulary "
      << vocabulary.size() << "\n";
  tc::TcTrainOptions options;
  options.epochs = config.training.epochs;
  options.batch_size = config.training.batch_size;
  options.adam = config.training.adam;
  options.seed = config.seed;
  options.decision = config.tc.decision;
  options.mlm_epochs = config.tc.mlm_epochs;
  options.mlm.batch_size = config.training.batch_size;
  options.mlm.adam = config.training.adam;
  options.mlm.mask_id = corpus::Vocabulary::kMask;
  options.mlm.first_regular = corpus::Vocabulary::kFirstRegular;
  const auto result = tc::train_tc(tc_model_config(config, vocabulary.size(), labels.size()), train,
                                   dev ? &*dev : nullptr, labels, options, &metrics);
  const auto& last = result.history.back();
  log << "tc: epoch " << last.epoch << " loss " << last.loss << " micro-F " << last.f1 << "\n";
  fs::create_directories(config.paths.output_dir);
  ag::save_checkpoint(config.paths.output_dir / kCheckpointName, checkpoint_config(config, vocabulary, labels),
                      result.model.parameters());
}

}  // namespace

void cmd_train(const RunConfig& config, std::ostream& log) {
  validate_run_config(config);
  // The output directory is created only once training has succeeded.
  std::ostringstream metrics;
  if (config.task == Task::si) {
    train_si_command(config, metrics, log);
  } else {
    train_tc_command(config, metrics, log);
  }
  corpus::write_file(config.paths.output_dir / kMetricsName, metrics.str());
}

CheckpointInfo parse_checkpoint_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("run") || !root.contains("vocabulary") || !root.contains("labels")) {
    throw FormatError("checkpoint config lacks run, vocabulary or labels");
  }
  CheckpointInfo info;
  try {
    info.config = parse_run_config(root["run"].dump(), {});
    info.vocabulary = corpus::Vocabulary(root["vocabulary"].get<std::vector<std::string>>());
    const auto labels = root["labels"].get<std::vector<std::string>>();
    if (!labels.empty()) info.labels = corpus::LabelSet(labels);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  info.task = info.config.task;
  info.preset = info.config.preset;
  return info;
}

void cmd_predict(const PredictRequest& request) {
  require_file(request.checkpoint, "--checkpoint");
  require_dir(request.articles, "--articles");
  require_output(request.output, "--output");
  if (!request.probabilities.empty()) require_output(request.probabilities, "--probabilities");
  const auto checkpoint = ag::load_checkpoint(request.checkpoint);
  const auto info = parse_checkpoint_config(checkpoint.config);
  if (!request.task.empty() && parse_task(request.task) != info.task) {
    throw ValidationError("checkpoint " + request.checkpoint.string() + " holds a " + task_name(info.task) +
                          " model, not " + request.task);
  }
  if (info.task == Task::tc) {
    require_file(request.spans, "--spans");
  } else if (!request.probabilities.empty()) {
    throw ValidationError("--probabilities applies to tc models only");
  }

  const auto articles = corpus::load_articles(request.articles);
  ag::Rng rng(info.config.seed);
  if (info.task == Task::si) {
    const si::SiModel<float> model(si_model_config(info.config, info.vocabulary.size()), rng);
    ag::restore_parameters(checkpoint, model.parameters());
    const auto data = si::make_si_corpus(articles, {}, info.vocabulary, info.config.encoder.max_positions);
    corpus::write_span_labels(request.output, si::predict_si_spans(model, data), corpus::LabelMode::si);
    return;
  }

  auto spans = load_any_span_labels(request.spans);
  for (auto& s : spans) s.technique.reset();
  const auto samples = corpus::build_tc_dataset(articles, spans, info.vocabulary, info.labels);
  const tc::TcModel<float> model(tc_model_config(info.config, info.vocabulary.size(), info.labels.size()), rng);
  ag::restore_parameters(checkpoint, model.parameters());
  const auto predictions = tc::predict_tc(model, samples);
  std::vector<std::size_t> counts;
  for (const auto& s : samples) counts.push_back(s.row_count);
  const auto rows =
      tc::prediction_rows(predictions, info.labels, info.config.tc.decision, counts, info.config.tc.threshold);
  corpus::write_span_labels(request.output, rows, corpus::LabelMode::tc);
  if (!request.probabilities.empty()) tc::write_probabilities(request.probabilities, predictions);
}

void cmd_score(const ScoreRequest& request, std::ostream& out) {
  require_file(request.gold, "--gold");
  require_file(request.predicted, "--pred");
  if (!request.report.empty()) require_output(request.report, "--report");
  if (!request.label_set.empty()) require_file(request.label_set, "--label-set");
  eval::ScoreReport report;
  if (request.task == Task::si) {
    const auto gold = load_any_span_labels(request.gold);
    const auto predicted = load_any_span_labels(request.predicted);
    report = eval::si_score(predicted, gold);
  } else {
    const auto gold = corpus::load_span_labels(request.gold, corpus::LabelMode::tc);
    const auto predicted = corpus::load_span_labels(request.predicted, corpus::LabelMode::tc);
    std::vector<std::string> classes;
    if (!request.label_set.empty()) {
      const auto labels = corpus::LabelSet::load(request.label_set);
      labels.validate(gold);
      labels.validate(predicted);
      classes = labels.names();
    } else {
      std::set<std::string> seen;
      for (const auto& s : gold) seen.insert(*s.technique);
      for (const auto& s : predicted) seen.insert(*s.technique);
      classes.assign(seen.begin(), seen.end());
    }
    report = eval::tc_micro_f(predicted, gold, classes);
  }
  eval::write_report_text(out, report);
  if (!request.report.empty()) {
    std::ostringstream tsv;
    eval::write_report_tsv(tsv, report);
    corpus::write_file(request.report, tsv.str());
  }
}

void cmd_ensemble(const EnsembleRequest& request) {
  if (request.inputs.empty()) throw ValidationError("ensemble needs at least one probability file");
  for (const auto& input : request.inputs) require_file(input, "probability file");
  require_file(request.label_set, "--label-set");
  if (!request.spans.empty()) require_file(request.spans, "--spans");
  require_output(request.output, "--output");
  if (!(request.threshold > 0.0 && request.threshold <= 1.0)) throw ValidationError("--threshold must lie in (0, 1]");

  std::vector<tc::PredictionSet> sets;
  for (const auto& input : request.inputs) sets.push_back(tc::read_probabilities(input));
  const auto labels = corpus::LabelSet::load(request.label_set);
  const auto combined = tc::ensemble(sets);

  std::vector<std::size_t> counts;
  if (!request.spans.empty()) {
    std::map<std::tuple<std::string, corpus::Offset, corpus::Offset>, std::size_t> rows;
    for (const auto& s : load_any_span_labels(request.spans)) ++rows[{s.article_id, s.begin, s.end}];
    for (const auto& id : combined.identities) {
      const auto it = rows.find({id.article_id, id.begin, id.end});
      counts.push_back(it == rows.end() ? 1 : it->second);
    }
  }
  const auto out = tc::prediction_rows(combined, labels, request.decision, counts, request.threshold);
  corpus::write_span_labels(request.output, out, corpus::LabelMode::tc);
}

}  // namespace propspan::cli
