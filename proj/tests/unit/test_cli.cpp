#include <map>
#include <sstream>

#include "doctest.h"
#include "propspan/cli/app.hpp"
#include "propspan/cli/commands.hpp"
#include "propspan/cli/config.hpp"
#include "propspan/cli/presets.hpp"
#include "propspan/cli/synthetic.hpp"
#include "propspan/corpus/io.hpp"
#include "propspan/corpus/text.hpp"
#include "propspan/error.hpp"
#include "temp_dir.hpp"

using namespace propspan;
using namespace propspan::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// A tiny model so that end-to-end runs take well under a second.
std::string small_config(const std::string& preset, const std::string& labels, const std::string& output,
                         std::size_t epochs = 2) {
  return R"({"preset": ")" + preset + R"(", "seed": 5,
    "paths": {"train_articles": "articles", "train_labels": ")" +
         labels + R"(", "output_dir": ")" + output + R"(", "label_set": "techniques.txt"},
    "encoder": {"hidden_dim": 16, "layers": 1, "heads": 2, "feedforward_dim": 32},
    "tagger": {"decoder_hidden": 16, "decoder_heads": 2, "decoder_feedforward": 32, "lstm_hidden": 8},
    "optimizer": {"learning_rate": 0.001, "epochs": )" +
         std::to_string(epochs) + "}}";
}

void write_synthetic_corpus(const fs::path& dir) { write_synthetic(dir, make_synthetic({})); }

}  // namespace

TEST_CASE("preset registry covers every model row") {
  std::vector<std::string> names;
  for (const auto& p : preset_registry()) names.push_back(p.name);
  CHECK(names == std::vector<std::string>{"bilstm-baseline", "linear", "crf", "lasertagger", "lasertagger-tf",
                                          "lasertagger-tf-ls", "tc-cls", "tc-rbert", "tc-rbert-w", "tc-rbert-ft",
                                          "tc-rbert-w-ft"});
  for (const auto& p : preset_registry()) {
    const auto config = preset_config(p.name);
    CHECK(config.task == p.task);
    CHECK(config.preset == p.name);
  }
  CHECK_THROWS_AS(preset_config("bert-large"), ValidationError);
}

TEST_CASE("lasertagger-tf-ls preset materializes the decoder and optimizer settings") {
  const auto config = preset_config("lasertagger-tf-ls");
  CHECK(config.tagger.head == si::HeadKind::lasertagger);
  CHECK(config.tagger.decoder.layers == 1);
  CHECK(config.tagger.decoder.hidden_dim == 128);
  CHECK(config.tagger.decoder.heads == 4);
  CHECK(config.training.adam.learning_rate == 2e-5);
  CHECK(config.training.adam.warmup_fraction == 0.1);
  CHECK(config.training.adam.accumulation == 2);
  CHECK(config.training.batch_size == 16);
  CHECK(config.tagger.tf_start == 1.0);
  CHECK(config.tagger.tf_end == 0.0);
  CHECK(config.tagger.label_smoothing == 0.1);
  CHECK(preset_config("lasertagger").tagger.tf_end == 1.0);
  CHECK(preset_config("lasertagger-tf").tagger.label_smoothing == 0.0);
}

TEST_CASE("tc presets select pooling and masked-LM finetuning") {
  CHECK(preset_config("tc-cls").tc.pooling == tc::Pooling::cls);
  CHECK(preset_config("tc-rbert").tc.pooling == tc::Pooling::mean);
  CHECK(preset_config("tc-rbert-w").tc.pooling == tc::Pooling::weighted);
  CHECK(preset_config("tc-rbert-w").tc.mlm_epochs == 0);
  CHECK(preset_config("tc-rbert-ft").tc.mlm_epochs == 3);
  CHECK(preset_config("tc-rbert-w-ft").tc.pooling == tc::Pooling::weighted);
}

TEST_CASE("run config parsing reports every problem at once") {
  const std::string text = R"({"preset": "crf", "typo": 1, "optimizer": {"epochs": "ten", "beta9": 0},
                               "encoder": {"dropout": "high"}, "tagger": {"head": "rnn"}})";
  try {
    parse_run_config(text, "/base");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string message = e.what();
    CHECK(message.find("typo: unknown key") != std::string::npos);
    CHECK(message.find("optimizer.epochs") != std::string::npos);
    CHECK(message.find("optimizer.beta9: unknown key") != std::string::npos);
    CHECK(message.find("encoder.dropout") != std::string::npos);
    CHECK(message.find("tagger.head") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("{not json", "/base"), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"seed": 3})", "/base"), ValidationError);
  CHECK_THROWS_AS(parse_run_config(R"({"preset": "crf", "task": "tc"})", "/base"), ValidationError);
}

TEST_CASE("run config resolves paths and applies environment overrides") {
  const std::string text = R"({"preset": "tc-rbert", "seed": 9,
    "paths": {"train_articles": "a", "train_labels": "/abs/l.tsv", "output_dir": "out"},
    "optimizer": {"learning_rate": 0.01, "epochs": 3}})";
  const auto plain = parse_run_config(text, "/base");
  CHECK(plain.paths.train_articles == fs::path("/base/a"));
  CHECK(plain.paths.train_labels == fs::path("/abs/l.tsv"));
  CHECK(plain.seed == 9);
  CHECK(plain.training.adam.learning_rate == 0.01);
  CHECK(plain.training.epochs == 3);
  CHECK(plain.tc.pooling == tc::Pooling::mean);

  const std::map<std::string, std::string> env{{"PROPSPAN_SEED", "42"}, {"PROPSPAN_OUTPUT_DIR", "/elsewhere"}};
  auto lookup = [&env](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const auto overridden = parse_run_config(text, "/base", lookup);
  CHECK(overridden.seed == 42);
  CHECK(overridden.paths.output_dir == fs::path("/elsewhere"));
  CHECK(overridden.paths.train_articles == fs::path("/base/a"));

  auto bad_seed = [](const char* name) -> const char* { return std::string(name) == "PROPSPAN_SEED" ? "-1" : nullptr; };
  CHECK_THROWS_AS(parse_run_config(text, "/base", bad_seed), ValidationError);
}

TEST_CASE("run config serialization round-trips") {
  auto config = preset_config("lasertagger-tf-ls");
  config.seed = 77;
  config.encoder.hidden_dim = 32;
  config.tc.class_weights = {1.0, 2.0};
  config.paths.train_articles = "/x/articles";
  const auto back = parse_run_config(run_config_json(config, true), {});
  CHECK(run_config_json(back, true) == run_config_json(config, true));
  CHECK(back.paths.train_articles == config.paths.train_articles);
  CHECK(parse_run_config(run_config_json(config, false), {}).paths.train_articles.empty());
}

TEST_CASE("validation catches missing paths before any output") {
  testing::TempDir dir;
  corpus::write_file(dir / "run.json", R"({"preset": "crf", "paths": {"train_articles": "missing",
    "train_labels": "labels.tsv", "output_dir": "out"}})");
  const auto result = invoke({"train", "--config", (dir / "run.json").string()});
  CHECK(result.code == kExitValidation);
  CHECK(result.err.find("train_articles") != std::string::npos);
  CHECK(result.err.find("train_labels") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("synthetic corpus is deterministic and has the documented shape") {
  const auto a = make_synthetic({});
  const auto b = make_synthetic({});
  REQUIRE(a.articles.size() == 10);
  std::size_t sentences = 0;
  for (const auto& article : a.articles) sentences += corpus::split_sentences(article).size();
  CHECK(sentences == 50);
  CHECK(a.spans.size() == 40);
  CHECK(a.labels.size() == 3);
  CHECK(a.spans == b.spans);
  for (std::size_t i = 0; i < a.articles.size(); ++i) CHECK(a.articles[i].text == b.articles[i].text);
  a.labels.validate(a.spans);
  std::map<std::string, int> per_class;
  for (const auto& s : a.spans) ++per_class[*s.technique];
  for (const auto& [name, count] : per_class) CHECK(count >= 13);
  CHECK(make_synthetic({.seed = 8}).spans != a.spans);
}

TEST_CASE("train, predict and score an SI model end to end") {
  testing::TempDir dir;
  write_synthetic_corpus(dir.path());
  corpus::write_file(dir / "run.json", small_config("linear", "si-labels.tsv", "out"));
  corpus::write_file(dir / "again.json", small_config("linear", "si-labels.tsv", "again"));
  REQUIRE(invoke({"train", "--config", (dir / "run.json").string()}).code == kExitOk);
  REQUIRE(invoke({"train", "--config", (dir / "again.json").string()}).code == kExitOk);
  const auto metrics = corpus::read_file(dir / "out/metrics.tsv");
  CHECK(metrics.rfind("epoch\tloss\tprecision\trecall\tf1\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 3);
  CHECK(metrics == corpus::read_file(dir / "again/metrics.tsv"));

  const auto ckpt = (dir / "out/model.ckpt").string(), articles = (dir / "articles").string();
  REQUIRE(invoke({"predict", "--checkpoint", ckpt, "--articles", articles, "--output", (dir / "p1.tsv").string()})
              .code == kExitOk);
  REQUIRE(invoke({"predict", "--checkpoint", ckpt, "--articles", articles, "--output", (dir / "p2.tsv").string(),
                  "--task", "si"})
              .code == kExitOk);
  CHECK(corpus::read_file(dir / "p1.tsv") == corpus::read_file(dir / "p2.tsv"));

  const auto mismatch = invoke({"predict", "--checkpoint", ckpt, "--articles", articles, "--output",
                                (dir / "p3.tsv").string(), "--task", "tc"});
  CHECK(mismatch.code == kExitValidation);
  CHECK_FALSE(fs::exists(dir / "p3.tsv"));

  fs::create_directories(dir / "empty");
  REQUIRE(invoke({"predict", "--checkpoint", ckpt, "--articles", (dir / "empty").string(), "--output",
                  (dir / "none.tsv").string()})
              .code == kExitOk);
  CHECK(corpus::read_file(dir / "none.tsv").empty());

  const auto gold = (dir / "si-labels.tsv").string();
  const auto self = invoke({"score", "--task", "si", "--gold", gold, "--pred", gold, "--report",
                            (dir / "report.tsv").string()});
  CHECK(self.code == kExitOk);
  CHECK(corpus::read_file(dir / "report.tsv") == "metric\tvalue\nprecision\t1.000000\nrecall\t1.000000\nf1\t1.000000\n");
}

TEST_CASE("score reproduces the half-overlap fixture") {
  testing::TempDir dir;
  corpus::write_file(dir / "gold.tsv", "1\t0\t10\n");
  corpus::write_file(dir / "pred.tsv", "1\t0\t5\n");
  const auto result = invoke({"score", "--task", "si", "--gold", (dir / "gold.tsv").string(), "--pred",
                              (dir / "pred.tsv").string(), "--report", (dir / "r.tsv").string()});
  CHECK(result.code == kExitOk);
  CHECK(corpus::read_file(dir / "r.tsv") == "metric\tvalue\nprecision\t1.000000\nrecall\t0.500000\nf1\t0.666667\n");
  CHECK(result.out.find("0.666667") != std::string::npos);
}

TEST_CASE("train and predict a TC model end to end") {
  testing::TempDir dir;
  write_synthetic_corpus(dir.path());
  // Duplicate one gold row so the span needs two prediction rows.
  auto gold = corpus::read_file(dir / "tc-labels.tsv");
  gold += gold.substr(0, gold.find('\n') + 1);
  corpus::write_file(dir / "tc-labels.tsv", gold);
  corpus::write_file(dir / "run.json", small_config("tc-rbert-w", "tc-labels.tsv", "out"));
  REQUIRE(invoke({"train", "--config", (dir / "run.json").string()}).code == kExitOk);

  const auto ckpt = (dir / "out/model.ckpt").string(), articles = (dir / "articles").string();
  const auto spans = (dir / "tc-labels.tsv").string();
  for (const char* name : {"a", "b"}) {
    REQUIRE(invoke({"predict", "--checkpoint", ckpt, "--articles", articles, "--spans", spans, "--output",
                    (dir / (std::string(name) + ".tsv")).string(), "--probabilities",
                    (dir / (std::string(name) + ".prob")).string()})
                .code == kExitOk);
  }
  const auto predicted = corpus::read_file(dir / "a.tsv");
  CHECK(predicted == corpus::read_file(dir / "b.tsv"));
  CHECK(corpus::read_file(dir / "a.prob") == corpus::read_file(dir / "b.prob"));
  CHECK(std::count(predicted.begin(), predicted.end(), '\n') == 41);

  const auto scored = invoke({"score", "--task", "tc", "--gold", spans, "--pred", (dir / "a.tsv").string(),
                              "--label-set", (dir / "techniques.txt").string()});
  CHECK(scored.code == kExitOk);
  const auto self = invoke({"score", "--task", "tc", "--gold", spans, "--pred", spans, "--report",
                            (dir / "self.tsv").string()});
  CHECK(self.code == kExitOk);
  CHECK(corpus::read_file(dir / "self.tsv").find("f1\t1.000000\n") != std::string::npos);

  // A single probability file reproduces the model's own decisions.
  REQUIRE(invoke({"ensemble", (dir / "a.prob").string(), "--label-set", (dir / "techniques.txt").string(), "--spans",
                  spans, "--output", (dir / "e.tsv").string()})
              .code == kExitOk);
  CHECK(corpus::read_file(dir / "e.tsv") == predicted);
}

TEST_CASE("ensemble averages, breaks ties low and ignores file order") {
  testing::TempDir dir;
  corpus::write_file(dir / "labels.txt", "A\nB\n");
  corpus::write_file(dir / "m1.prob", "1\t0\t4\t0.4\t0.8\n2\t3\t9\t0.9\t0.2\n");
  corpus::write_file(dir / "m2.prob", "1\t0\t4\t0.8\t0.4\n2\t3\t9\t0.3\t0.1\n");
  corpus::write_file(dir / "m3.prob", "1\t0\t4\t0.1\t0.3\n2\t3\t9\t0.2\t0.7\n");
  auto ensemble = [&](std::vector<std::string> files, const std::string& out) {
    std::vector<std::string> args{"ensemble"};
    for (const auto& f : files) args.push_back((dir / f).string());
    for (const auto& a : {std::string("--label-set"), (dir / "labels.txt").string(), std::string("--output"),
                          (dir / out).string()}) {
      args.push_back(a);
    }
    return invoke(args).code;
  };
  REQUIRE(ensemble({"m1.prob", "m2.prob"}, "two.tsv") == kExitOk);
  CHECK(corpus::read_file(dir / "two.tsv") == "1\tA\t0\t4\n2\tA\t3\t9\n");
  REQUIRE(ensemble({"m1.prob", "m2.prob", "m3.prob"}, "abc.tsv") == kExitOk);
  REQUIRE(ensemble({"m3.prob", "m1.prob", "m2.prob"}, "cab.tsv") == kExitOk);
  REQUIRE(ensemble({"m2.prob", "m3.prob", "m1.prob"}, "bca.tsv") == kExitOk);
  CHECK(corpus::read_file(dir / "abc.tsv") == corpus::read_file(dir / "cab.tsv"));
  CHECK(corpus::read_file(dir / "abc.tsv") == corpus::read_file(dir / "bca.tsv"));

  corpus::write_file(dir / "short.prob", "1\t0\t4\t0.4\t0.8\n");
  CHECK(ensemble({"m1.prob", "short.prob"}, "bad.tsv") == kExitRuntime);
  CHECK(ensemble({"missing.prob"}, "bad.tsv") == kExitValidation);
  CHECK_FALSE(fs::exists(dir / "bad.tsv"));
}

TEST_CASE("exit codes separate usage, validation and runtime errors") {
  CHECK(invoke({}).code == kExitValidation);
  CHECK(invoke({"frobnicate"}).code == kExitValidation);
  CHECK(invoke({"--help"}).code == kExitOk);
  const auto listed = invoke({"presets"});
  CHECK(listed.code == kExitOk);
  CHECK(listed.out.find("lasertagger-tf-ls\tsi\t") != std::string::npos);

  testing::TempDir dir;
  corpus::write_file(dir / "gold.tsv", "1\t0\t10\n");
  corpus::write_file(dir / "broken.tsv", "1\tzero\t10\n");
  CHECK(invoke({"score", "--task", "si", "--gold", (dir / "gold.tsv").string(), "--pred",
                (dir / "broken.tsv").string()})
            .code == kExitRuntime);
  CHECK(invoke({"score", "--task", "xx", "--gold", (dir / "gold.tsv").string(), "--pred",
                (dir / "gold.tsv").string()})
            .code == kExitValidation);
}
