#include "propspan/cli/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <limits>

#include <json.hpp>

#include "propspan/cli/presets.hpp"
#include "propspan/corpus/io.hpp"
#include "propspan/corpus/label_set.hpp"
#include "propspan/error.hpp"

namespace propspan::cli {

namespace fs = std::filesystem;
static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed parsing assumes a 64-bit size_t");
using nlohmann::json;

const char* task_name(Task task) { return task == Task::si ? "si" : "tc"; }

Task parse_task(const std::string& name) {
  if (name == "si") return Task::si;
  if (name == "tc") return Task::tc;
  throw ValidationError("unknown task '" + name + "' (expected si or tc)");
}

namespace {

const char* decision_name(tc::DecisionMode mode) { return mode == tc::DecisionMode::single ? "single" : "multilabel"; }

tc::DecisionMode parse_decision(const std::string& name) {
  if (name == "multilabel") return tc::DecisionMode::multilabel;
  if (name == "single") return tc::DecisionMode::single;
  throw ValidationError("unknown decision mode '" + name + "' (expected multilabel or single)");
}

// Reads one JSON object, recording every problem instead of stopping at the first.
class Section {
 public:
  Section(const json& root, std::string name, std::vector<std::string>& problems,
          std::initializer_list<const char*> keys)
      : name_(std::move(name)), problems_(problems) {
    if (root.is_null()) return;
    if (!root.is_object()) {
      problems_.push_back(where("") + " must be an object");
      return;
    }
    node_ = &root;
    for (const auto& [key, value] : root.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) problems_.push_back(where(key) + ": unknown key");
    }
  }

  const json* find(const char* key) const {
    if (!node_) return nullptr;
    const auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  void read(const char* key, std::size_t& out) const {
    if (const auto* v = find(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)) {
        out = v->get<std::size_t>();
      } else {
        problems_.push_back(where(key) + ": expected a non-negative integer");
      }
    }
  }

  void read(const char* key, double& out) const {
    if (const auto* v = find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        problems_.push_back(where(key) + ": expected a number");
      }
    }
  }

  void read(const char* key, bool& out) const {
    if (const auto* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        problems_.push_back(where(key) + ": expected true or false");
      }
    }
  }

  void read(const char* key, std::string& out) const {
    if (const auto* v = find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        problems_.push_back(where(key) + ": expected a string");
      }
    }
  }

  void read(const char* key, std::vector<double>& out) const {
    if (const auto* v = find(key)) {
      bool ok = v->is_array();
      if (ok) {
        for (const auto& x : *v) ok = ok && x.is_number();
      }
      if (ok) {
        out = v->get<std::vector<double>>();
      } else {
        problems_.push_back(where(key) + ": expected an array of numbers");
      }
    }
  }

  void read_path(const char* key, const fs::path& base, fs::path& out) const {
    std::string text;
    if (!find(key)) return;
    read(key, text);
    if (!text.empty()) out = fs::path(text).is_absolute() || base.empty() ? fs::path(text) : base / text;
  }

  // Parses a string field through `parse`, which throws ValidationError.
  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) const {
    if (!find(key)) return;
    std::string text;
    const auto before = problems_.size();
    read(key, text);
    if (problems_.size() != before) return;
    try {
      out = parse(text);
    } catch (const ValidationError& e) {
      problems_.push_back(where(key) + ": " + e.what());
    }
  }

  std::string where(const std::string& key) const {
    if (name_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? name_ : name_ + "." + key;
  }

 private:
  std::string name_;
  std::vector<std::string>& problems_;
  const json* node_ = nullptr;
};

[[noreturn]] void throw_problems(const std::vector<std::string>& problems) {
  std::string message = "invalid run configuration:";
  for (const auto& p : problems) message += "\n  " + p;
  throw ValidationError(message);
}

const json& member(const json& root, const char* key) {
  static const json null;
  if (!root.is_object()) return null;
  const auto it = root.find(key);
  return it == root.end() ? null : *it;
}

RunConfig parse_into(const std::string& json_text, const fs::path& base_dir, const EnvLookup& getenv,
                     std::vector<std::string>& problems) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("run configuration is not valid JSON: ") + e.what());
  }
  const Section top(root, "", problems,
                    {"task", "preset", "seed", "paths", "data", "encoder", "tagger", "tc", "optimizer"});

  std::string preset_name, task_text;
  top.read("preset", preset_name);
  top.read("task", task_text);
  RunConfig config;
  if (!preset_name.empty()) {
    try {
      config = preset_config(preset_name);
    } catch (const ValidationError& e) {
      problems.push_back(std::string("preset: ") + e.what());
    }
  }
  if (!task_text.empty()) {
    try {
      const Task task = parse_task(task_text);
      if (!preset_name.empty() && config.preset == preset_name && task != config.task) {
        problems.push_back("task: '" + task_text + "' conflicts with preset '" + preset_name + "' (task " +
                           task_name(config.task) + ")");
      }
      config.task = task;
    } catch (const ValidationError& e) {
      problems.push_back(std::string("task: ") + e.what());
    }
  } else if (preset_name.empty()) {
    problems.push_back("config: either preset or task is required");
  }
  top.read("seed", config.seed);

  const Section paths(member(root, "paths"), "paths", problems,
                      {"train_articles", "train_labels", "dev_articles", "dev_labels", "output_dir", "label_set"});
  paths.read_path("train_articles", base_dir, config.paths.train_articles);
  paths.read_path("train_labels", base_dir, config.paths.train_labels);
  paths.read_path("dev_articles", base_dir, config.paths.dev_articles);
  paths.read_path("dev_labels", base_dir, config.paths.dev_labels);
  paths.read_path("output_dir", base_dir, config.paths.output_dir);
  paths.read_path("label_set", base_dir, config.paths.label_set);

  const Section data(member(root, "data"), "data", problems, {"vocab_min_count"});
  data.read("vocab_min_count", config.vocab_min_count);

  auto& enc = config.encoder;
  const Section encoder(member(root, "encoder"), "encoder", problems,
                        {"hidden_dim", "layers", "heads", "feedforward_dim", "max_positions", "dropout", "init_std"});
  encoder.read("hidden_dim", enc.hidden_dim);
  encoder.read("layers", enc.layers);
  encoder.read("heads", enc.heads);
  encoder.read("feedforward_dim", enc.feedforward_dim);
  encoder.read("max_positions", enc.max_positions);
  encoder.read("dropout", enc.dropout);
  encoder.read("init_std", enc.init_std);

  auto& tag = config.tagger;
  const Section tagger(member(root, "tagger"), "tagger", problems,
                       {"head", "decoder_hidden", "decoder_heads", "decoder_layers", "decoder_feedforward", "tf_start",
                        "tf_end", "label_smoothing", "postprocess", "lstm_hidden"});
  tagger.read_enum("head", tag.head, si::parse_head_kind);
  tagger.read("decoder_hidden", tag.decoder.hidden_dim);
  tagger.read("decoder_heads", tag.decoder.heads);
  tagger.read("decoder_layers", tag.decoder.layers);
  tagger.read("decoder_feedforward", tag.decoder.feedforward_dim);
  tagger.read("tf_start", tag.tf_start);
  tagger.read("tf_end", tag.tf_end);
  tagger.read("label_smoothing", tag.label_smoothing);
  tagger.read("postprocess", tag.postprocess);
  tagger.read("lstm_hidden", tag.lstm_hidden);
  tag.decoder.max_positions = enc.max_positions;

  const Section tc_section(member(root, "tc"), "tc", problems,
                           {"pooling", "decision", "threshold", "mlm_epochs", "class_weights"});
  tc_section.read_enum("pooling", config.tc.pooling, tc::parse_pooling);
  tc_section.read_enum("decision", config.tc.decision, parse_decision);
  tc_section.read("threshold", config.tc.threshold);
  tc_section.read("mlm_epochs", config.tc.mlm_epochs);
  tc_section.read("class_weights", config.tc.class_weights);

  auto& train = config.training;
  const Section optimizer(member(root, "optimizer"), "optimizer", problems,
                          {"learning_rate", "warmup_fraction", "accumulation", "batch_size", "epochs", "beta1",
                           "beta2", "epsilon"});
  optimizer.read("learning_rate", train.adam.learning_rate);
  optimizer.read("warmup_fraction", train.adam.warmup_fraction);
  optimizer.read("accumulation", train.adam.accumulation);
  optimizer.read("batch_size", train.batch_size);
  optimizer.read("epochs", train.epochs);
  optimizer.read("beta1", train.adam.beta1);
  optimizer.read("beta2", train.adam.beta2);
  optimizer.read("epsilon", train.adam.epsilon);

  if (getenv) {
    const std::pair<const char*, fs::path*> path_overrides[] = {
        {"PROPSPAN_TRAIN_ARTICLES", &config.paths.train_articles}, {"PROPSPAN_TRAIN_LABELS", &config.paths.train_labels},
        {"PROPSPAN_DEV_ARTICLES", &config.paths.dev_articles},     {"PROPSPAN_DEV_LABELS", &config.paths.dev_labels},
        {"PROPSPAN_OUTPUT_DIR", &config.paths.output_dir},         {"PROPSPAN_LABEL_SET", &config.paths.label_set}};
    for (const auto& [name, target] : path_overrides) {
      if (const char* value = getenv(name); value && *value) *target = value;
    }
    if (const char* value = getenv("PROPSPAN_SEED"); value && *value) {
      char* end = nullptr;
      errno = 0;
      const unsigned long long seed = std::strtoull(value, &end, 10);
      if (*end != '\0' || errno != 0 || value[0] == '-') {
        problems.push_back(std::string("PROPSPAN_SEED: '") + value + "' is not a non-negative integer");
      } else {
        config.seed = seed;
      }
    }
  }

  return config;
}

void collect_problems(const RunConfig& config, std::vector<std::string>& problems) {
  auto collect = [&](auto&& check) {
    try {
      check();
    } catch (const ValidationError& e) {
      problems.push_back(e.what());
    }
  };
  auto encoder = config.encoder;
  encoder.vocab_size = std::max<std::size_t>(encoder.vocab_size, 1);  // known only after the corpus is read
  collect([&] { encoder.validate(); });
  if (config.task == Task::si) collect([&] { config.tagger.validate(); });
  if (config.training.epochs == 0) problems.push_back("optimizer.epochs must be positive");
  if (config.training.batch_size == 0) problems.push_back("optimizer.batch_size must be positive");
  if (config.training.adam.accumulation == 0) problems.push_back("optimizer.accumulation must be positive");
  if (!(config.training.adam.learning_rate > 0.0)) problems.push_back("optimizer.learning_rate must be positive");
  const double warmup = config.training.adam.warmup_fraction;
  if (!(warmup >= 0.0 && warmup <= 1.0)) problems.push_back("optimizer.warmup_fraction must lie in [0, 1]");
  const auto& adam = config.training.adam;
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) problems.push_back("optimizer.beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) problems.push_back("optimizer.beta2 must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) problems.push_back("optimizer.epsilon must be positive");
  if (config.vocab_min_count == 0) problems.push_back("data.vocab_min_count must be positive");
  if (!(config.tc.threshold > 0.0 && config.tc.threshold <= 1.0)) problems.push_back("tc.threshold must lie in (0, 1]");

  const auto& p = config.paths;
  auto require_dir = [&](const fs::path& path, const char* key) {
    if (path.empty()) {
      problems.push_back(std::string("paths.") + key + " is required");
    } else if (!fs::is_directory(path)) {
      problems.push_back(std::string("paths.") + key + ": directory " + path.string() + " does not exist");
    }
  };
  auto require_file = [&](const fs::path& path, const char* key) {
    if (path.empty()) {
      problems.push_back(std::string("paths.") + key + " is required");
    } else if (!fs::is_regular_file(path)) {
      problems.push_back(std::string("paths.") + key + ": file " + path.string() + " does not exist");
    }
  };
  require_dir(p.train_articles, "train_articles");
  require_file(p.train_labels, "train_labels");
  if (!p.dev_articles.empty() || !p.dev_labels.empty()) {
    require_dir(p.dev_articles, "dev_articles");
    require_file(p.dev_labels, "dev_labels");
  }
  if (p.output_dir.empty()) {
    problems.push_back("paths.output_dir is required");
  } else if (fs::exists(p.output_dir) && !fs::is_directory(p.output_dir)) {
    problems.push_back("paths.output_dir: " + p.output_dir.string() + " exists and is not a directory");
  }
  if (config.task == Task::tc) {
    std::size_t classes = corpus::LabelSet::default_techniques().size();
    if (!p.label_set.empty()) {
      require_file(p.label_set, "label_set");
      if (fs::is_regular_file(p.label_set)) {
        collect([&] {
          try {
            classes = corpus::LabelSet::load(p.label_set).size();
          } catch (const FormatError& e) {
            throw ValidationError(std::string("paths.label_set: ") + e.what());
          }
        });
      }
    }
    if (!config.tc.class_weights.empty() && config.tc.class_weights.size() != classes) {
      problems.push_back("tc.class_weights has " + std::to_string(config.tc.class_weights.size()) + " entries for " +
                         std::to_string(classes) + " classes");
    }
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir, const EnvLookup& getenv) {
  std::vector<std::string> problems;
  auto config = parse_into(json_text, base_dir, getenv, problems);
  if (!problems.empty()) throw_problems(problems);
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ValidationError("config file " + path.string() + " does not exist");
  std::vector<std::string> problems;
  auto config = parse_into(corpus::read_file(path), path.parent_path(),
                           [](const char* name) { return std::getenv(name); }, problems);
  collect_problems(config, problems);
  if (!problems.empty()) throw_problems(problems);
  return config;
}

void validate_run_config(const RunConfig& config) {
  std::vector<std::string> problems;
  collect_problems(config, problems);
  if (!problems.empty()) throw_problems(problems);
}

std::string run_config_json(const RunConfig& config, bool include_paths) {
  json root;
  root["task"] = task_name(config.task);
  if (!config.preset.empty()) root["preset"] = config.preset;
  root["seed"] = config.seed;
  if (include_paths) {
    const auto& p = config.paths;
    json paths = json::object();
    auto put = [&](const char* key, const fs::path& path) {
      if (!path.empty()) paths[key] = path.string();
    };
    put("train_articles", p.train_articles);
    put("train_labels", p.train_labels);
    put("dev_articles", p.dev_articles);
    put("dev_labels", p.dev_labels);
    put("output_dir", p.output_dir);
    put("label_set", p.label_set);
    root["paths"] = paths;
  }
  root["data"] = {{"vocab_min_count", config.vocab_min_count}};
  const auto& e = config.encoder;
  root["encoder"] = {{"hidden_dim", e.hidden_dim},         {"layers", e.layers},
                     {"heads", e.heads},                   {"feedforward_dim", e.feedforward_dim},
                     {"max_positions", e.max_positions},   {"dropout", e.dropout},
                     {"init_std", e.init_std}};
  const auto& t = config.tagger;
  root["tagger"] = {{"head", si::head_kind_name(t.head)},
                    {"decoder_hidden", t.decoder.hidden_dim},
                    {"decoder_heads", t.decoder.heads},
                    {"decoder_layers", t.decoder.layers},
                    {"decoder_feedforward", t.decoder.feedforward_dim},
                    {"tf_start", t.tf_start},
                    {"tf_end", t.tf_end},
                    {"label_smoothing", t.label_smoothing},
                    {"postprocess", t.postprocess},
                    {"lstm_hidden", t.lstm_hidden}};
  root["tc"] = {{"pooling", tc::pooling_name(config.tc.pooling)},
                {"decision", decision_name(config.tc.decision)},
                {"threshold", config.tc.threshold},
                {"mlm_epochs", config.tc.mlm_epochs},
                {"class_weights", config.tc.class_weights}};
  const auto& o = config.training;
  root["optimizer"] = {{"learning_rate", o.adam.learning_rate},
                       {"warmup_fraction", o.adam.warmup_fraction},
                       {"accumulation", o.adam.accumulation},
                       {"batch_size", o.batch_size},
                       {"epochs", o.epochs},
                       {"beta1", o.adam.beta1},
                       {"beta2", o.adam.beta2},
                       {"epsilon", o.adam.epsilon}};
  return root.dump(2);
}

}  // namespace propspan::cli
