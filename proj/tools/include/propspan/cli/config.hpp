#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "propspan/autograd/optimizer.hpp"
#include "propspan/si/model.hpp"
#include "propspan/tc/classifier.hpp"

namespace propspan::cli {

enum class Task { si, tc };

const char* task_name(Task task);
/// Throws ValidationError for names other than "si" and "tc".
Task parse_task(const std::string& name);

struct RunPaths {
  std::filesystem::path train_articles;
  std::filesystem::path train_labels;
  std::filesystem::path dev_articles;
  std::filesystem::path dev_labels;
  std::filesystem::path output_dir;
  /// Technique names, one per line. TC only; the 14 task techniques when empty.
  std::filesystem::path label_set;
};

struct TrainingSettings {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  ag::AdamConfig adam{};
};

struct TcSettings {
  tc::Pooling pooling = tc::Pooling::weighted;
  tc::DecisionMode decision = tc::DecisionMode::multilabel;
  double threshold = 0.5;
  std::size_t mlm_epochs = 0;
  std::vector<double> class_weights;
};

/// Everything a train command needs. Built from a preset, then the config
/// file, then environment overrides.
struct RunConfig {
  Task task = Task::si;
  std::string preset;
  std::uint64_t seed = 13;
  RunPaths paths;
  std::size_t vocab_min_count = 2;
  encoder::EncoderConfig encoder{};
  si::TaggerConfig tagger{};
  TcSettings tc{};
  TrainingSettings training{};
};

/// Environment variables PROPSPAN_TRAIN_ARTICLES, PROPSPAN_TRAIN_LABELS,
/// PROPSPAN_DEV_ARTICLES, PROPSPAN_DEV_LABELS, PROPSPAN_OUTPUT_DIR,
/// PROPSPAN_LABEL_SET and PROPSPAN_SEED override the file's paths and seed.
using EnvLookup = std::function<const char*(const char*)>;

/// Parses a JSON run configuration on top of its preset. Relative paths
/// resolve against `base_dir`; `getenv` supplies overrides and may be empty.
/// Every unknown key, wrong type and bad value goes into one ValidationError.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir,
                           const EnvLookup& getenv = {});
/// parse_run_config with the process environment, then validate_run_config.
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks values and that input paths exist; throws ValidationError listing all problems.
void validate_run_config(const RunConfig& config);

/// JSON text of the config. Without paths it is what checkpoints embed.
std::string run_config_json(const RunConfig& config, bool include_paths);

}  // namespace propspan::cli
