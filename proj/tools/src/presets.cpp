#include "propspan/cli/presets.hpp"

#include "propspan/error.hpp"

namespace propspan::cli {

const std::vector<PresetInfo>& preset_registry() {
  static const std::vector<PresetInfo> registry{
      {"bilstm-baseline", Task::si, "BiLSTM tagger with per-token softmax and gap filling"},
      {"linear", Task::si, "encoder with a per-token softmax head and gap filling"},
      {"crf", Task::si, "encoder with a linear-chain CRF head"},
      {"lasertagger", Task::si, "encoder with an autoregressive decoder, always teacher forced"},
      {"lasertagger-tf", Task::si, "decoder with teacher forcing decaying from 1 to 0"},
      {"lasertagger-tf-ls", Task::si, "decoder with decaying teacher forcing and label smoothing 0.1"},
      {"tc-cls", Task::tc, "classifier-token output only"},
      {"tc-rbert", Task::tc, "classifier token joined with mean span pooling"},
      {"tc-rbert-w", Task::tc, "classifier token joined with weighted span pooling"},
      {"tc-rbert-ft", Task::tc, "mean span pooling after 3 epochs of in-task masked-LM training"},
      {"tc-rbert-w-ft", Task::tc, "weighted span pooling after 3 epochs of in-task masked-LM training"},
  };
  return registry;
}

RunConfig preset_config(const std::string& name) {
  RunConfig config;
  config.preset = name;
  config.training.epochs = 20;
  config.training.batch_size = 16;
  config.training.adam.learning_rate = 2e-5;
  config.training.adam.warmup_fraction = 0.1;
  config.training.adam.accumulation = 2;

  auto& tagger = config.tagger;
  tagger.decoder = si::DecoderConfig{};
  tagger.decoder.max_positions = config.encoder.max_positions;
  tagger.tf_start = 1.0;
  tagger.tf_end = 0.0;

  if (name == "bilstm-baseline") {
    tagger.head = si::HeadKind::bilstm;
    tagger.postprocess = true;
  } else if (name == "linear") {
    tagger.head = si::HeadKind::linear;
    tagger.postprocess = true;
  } else if (name == "crf") {
    tagger.head = si::HeadKind::crf;
  } else if (name == "lasertagger") {
    tagger.head = si::HeadKind::lasertagger;
    tagger.tf_end = 1.0;
  } else if (name == "lasertagger-tf") {
    tagger.head = si::HeadKind::lasertagger;
  } else if (name == "lasertagger-tf-ls") {
    tagger.head = si::HeadKind::lasertagger;
    tagger.label_smoothing = 0.1;
  } else if (name == "tc-cls" || name == "tc-rbert" || name == "tc-rbert-w" || name == "tc-rbert-ft" ||
             name == "tc-rbert-w-ft") {
    config.task = Task::tc;
    config.tc.pooling = name == "tc-cls"                                  ? tc::Pooling::cls
                        : name == "tc-rbert" || name == "tc-rbert-ft" ? tc::Pooling::mean
                                                                          : tc::Pooling::weighted;
    config.tc.mlm_epochs = name.ends_with("-ft") ? 3 : 0;
  } else {
    std::string known;
    for (const auto& p : preset_registry()) known += (known.empty() ? "" : ", ") + p.name;
    throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return config;
}

}  // namespace propspan::cli
