#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "propspan/cli/config.hpp"
#include "propspan/corpus/label_set.hpp"
#include "propspan/corpus/vocabulary.hpp"

namespace propspan::cli {

/// Trains per `config`; writes model.ckpt and metrics.tsv to the output dir.
void cmd_train(const RunConfig& config, std::ostream& log);

struct PredictRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path articles;
  /// TC: spans to classify (TC label format, technique column ignored).
  std::filesystem::path spans;
  std::filesystem::path output;
  /// TC: optional probability file for ensembling.
  std::filesystem::path probabilities;
  /// Expected task; empty accepts the checkpoint's.
  std::string task;
};

void cmd_predict(const PredictRequest& request);

struct ScoreRequest {
  Task task = Task::si;
  std::filesystem::path gold;
  std::filesystem::path predicted;
  /// Optional machine-readable report.
  std::filesystem::path report;
  /// TC: classes to list; the gold and predicted techniques when empty.
  std::filesystem::path label_set;
};

void cmd_score(const ScoreRequest& request, std::ostream& out);

struct EnsembleRequest {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path label_set;
  /// Optional TC spans file whose duplicate rows set the rows per span.
  std::filesystem::path spans;
  std::filesystem::path output;
  tc::DecisionMode decision = tc::DecisionMode::multilabel;
  double threshold = 0.5;
};

void cmd_ensemble(const EnsembleRequest& request);

/// Task, vocabulary and label set stored with a checkpoint.
struct CheckpointInfo {
  Task task = Task::si;
  std::string preset;
  RunConfig config;
  corpus::Vocabulary vocabulary;
  corpus::LabelSet labels;
};

CheckpointInfo parse_checkpoint_config(const std::string& json_text);

}  // namespace propspan::cli
