#include "propspan/cli/app.hpp"

#include <ostream>

#include <CLI11.hpp>

#include "propspan/cli/commands.hpp"
#include "propspan/cli/presets.hpp"
#include "propspan/cli/synthetic.hpp"
#include "propspan/error.hpp"

namespace propspan::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Propaganda span identification and technique classification"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train a model from a JSON run configuration");
  std::filesystem::path config_path;
  train->add_option("--config", config_path, "Run configuration file")->required();

  auto* predict = app.add_subcommand("predict", "Predict spans or techniques with a trained model");
  PredictRequest predict_request;
  predict->add_option("--checkpoint", predict_request.checkpoint, "Model checkpoint")->required();
  predict->add_option("--articles", predict_request.articles, "Directory of article<id>.txt files")->required();
  predict->add_option("--output", predict_request.output, "Prediction TSV to write")->required();
  predict->add_option("--spans", predict_request.spans, "TC: spans to classify (SI or TC label format)");
  predict->add_option("--probabilities", predict_request.probabilities, "TC: class probability file to write");
  predict->add_option("--task", predict_request.task, "Expected task of the checkpoint (si or tc)");

  auto* score = app.add_subcommand("score", "Score predictions against gold labels");
  ScoreRequest score_request;
  std::string score_task;
  score->add_option("--task", score_task, "si or tc")->required();
  score->add_option("--gold", score_request.gold, "Gold label TSV")->required();
  score->add_option("--pred", score_request.predicted, "Predicted label TSV")->required();
  score->add_option("--report", score_request.report, "Also write metric/value rows here");
  score->add_option("--label-set", score_request.label_set, "TC: technique list to report");

  auto* ensemble = app.add_subcommand("ensemble", "Average TC probability files and decide techniques");
  EnsembleRequest ensemble_request;
  std::string mode = "multilabel";
  ensemble->add_option("inputs", ensemble_request.inputs, "Probability files")->required();
  ensemble->add_option("--label-set", ensemble_request.label_set, "Technique list, one per line")->required();
  ensemble->add_option("--output", ensemble_request.output, "TC TSV to write")->required();
  ensemble->add_option("--spans", ensemble_request.spans, "Span rows; repeated spans get one row each");
  ensemble->add_option("--mode", mode, "multilabel or single");
  ensemble->add_option("--threshold", ensemble_request.threshold, "Multilabel decision threshold");

  auto* synthetic = app.add_subcommand("make-synthetic", "Write a deterministic toy corpus");
  std::filesystem::path synthetic_dir;
  SyntheticOptions synthetic_options;
  synthetic->add_option("--output", synthetic_dir, "Directory to create")->required();
  synthetic->add_option("--seed", synthetic_options.seed, "Generator seed");

  app.add_subcommand("presets", "List the model presets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*train) {
      cmd_train(load_run_config(config_path), err);
    } else if (*predict) {
      cmd_predict(predict_request);
    } else if (*score) {
      score_request.task = parse_task(score_task);
      cmd_score(score_request, out);
    } else if (*ensemble) {
      if (mode == "multilabel") {
        ensemble_request.decision = tc::DecisionMode::multilabel;
      } else if (mode == "single") {
        ensemble_request.decision = tc::DecisionMode::single;
      } else {
        throw ValidationError("--mode must be multilabel or single, not '" + mode + "'");
      }
      cmd_ensemble(ensemble_request);
    } else if (*synthetic) {
      write_synthetic(synthetic_dir, make_synthetic(synthetic_options));
    } else {
      for (const auto& p : preset_registry()) out << p.name << '\t' << task_name(p.task) << '\t' << p.description << '\n';
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace propspan::cli
