#include <cmath>

#include "doctest.h"
#include "propspan/autograd/grad_check.hpp"
#include "propspan/encoder/encoder.hpp"

using namespace propspan;
using namespace propspan::ag;
using namespace propspan::encoder;

namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.vocab_size = 12;
  cfg.hidden_dim = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.feedforward_dim = 16;
  cfg.max_positions = 8;
  cfg.dropout = 0.0;
  cfg.init_std = 0.3;
  return cfg;
}

template <typename T>
EncoderModel<T> make_model(EncoderConfig cfg, std::uint64_t seed = 1) {
  Rng rng(seed);
  return EncoderModel<T>(cfg, rng);
}

std::vector<float> snapshot(const ParameterList<float>& params) {
  std::vector<float> all;
  for (const auto& p : params) all.insert(all.end(), p.tensor.values().begin(), p.tensor.values().end());
  return all;
}

}  // namespace

TEST_CASE("config validation lists every problem") {
  EncoderConfig cfg;
  cfg.hidden_dim = 10;
  cfg.heads = 4;
  cfg.dropout = 1.5;
  try {
    cfg.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string message = e.what();
    CHECK(message.find("vocab_size") != std::string::npos);
    CHECK(message.find("divisible") != std::string::npos);
    CHECK(message.find("dropout") != std::string::npos);
  }
}

TEST_CASE("encode shapes, determinism and position sensitivity") {
  const auto model = make_model<float>(small_config());
  const std::vector<int> one{7};
  CHECK(model.encode(one).shape() == Shape{1, 8});

  const std::vector<int> ids{6, 7, 8, 9, 10};
  const auto a = model.encode(ids);
  const auto b = model.encode(ids);
  CHECK(a.shape() == Shape{5, 8});
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  for (float v : a.values()) CHECK(std::isfinite(v));

  const std::vector<int> swapped{7, 6, 8, 9, 10};
  const auto c = model.encode(swapped);
  double diff = 0.0;
  for (std::size_t j = 0; j < 8; ++j) diff += std::abs(a.at(0, j) - c.at(1, j));
  CHECK(diff > 1e-4);

  const std::vector<int> too_long(9, 6);
  CHECK_THROWS_AS(model.encode(too_long), ContractError);
  const std::vector<int> bad_id{12};
  CHECK_THROWS_AS(model.encode(bad_id), ContractError);
}

TEST_CASE("the same seed builds the same model at every precision") {
  const auto f = make_model<float>(small_config(), 9);
  const auto d = make_model<double>(small_config(), 9);
  const auto fp = f.parameters();
  const auto dp = d.parameters();
  REQUIRE(fp.size() == dp.size());
  for (std::size_t i = 0; i < fp.size(); ++i) {
    CHECK(fp[i].name == dp[i].name);
    for (std::size_t j = 0; j < fp[i].tensor.size(); ++j) {
      CHECK(fp[i].tensor.values()[j] == static_cast<float>(dp[i].tensor.values()[j]));
    }
  }
}

TEST_CASE("masked-LM gradient passes the finite-difference oracle") {
  const auto model = make_model<long double>(small_config(), 3);
  const std::vector<int> ids{6, 4, 8, 9, 4};
  const std::vector<int> positions{1, 4};
  const std::vector<int> targets{7, 11};
  const auto result = grad_check<long double>(
      [&] { return model.mlm_loss(ids, positions, targets); }, model.parameters(), 3e-5);
  INFO(result.worst_parameter, "[", result.worst_index, "]");
  CHECK(result.max_relative_error < 1e-5);
  CHECK(result.coordinates == parameter_count(model.parameters()));
}

TEST_CASE("dropout only at training time") {
  auto cfg = small_config();
  cfg.dropout = 0.5;
  const auto model = make_model<float>(cfg);
  const std::vector<int> ids{6, 7, 8};
  Rng rng(2);
  const auto train = model.encode(ids, &rng);
  const auto eval1 = model.encode(ids);
  const auto eval2 = model.encode(ids);
  CHECK(std::equal(eval1.values().begin(), eval1.values().end(), eval2.values().begin()));
  CHECK_FALSE(std::equal(eval1.values().begin(), eval1.values().end(), train.values().begin()));
}

TEST_CASE("mask policy") {
  Rng rng(5);
  std::vector<int> ids(20000, 9);
  ids[0] = 3;  // reserved ids are never selected
  const auto masked = mask_tokens(ids, 0.15, 12, 4, 6, rng);
  CHECK(masked.positions.front() != 0);
  const double selected = static_cast<double>(masked.positions.size()) / ids.size();
  CHECK(selected == doctest::Approx(0.15).epsilon(0.05));
  std::size_t as_mask = 0, unchanged = 0;
  for (std::size_t i = 0; i < masked.positions.size(); ++i) {
    CHECK(masked.targets[i] == 9);
    const int now = masked.ids[static_cast<std::size_t>(masked.positions[i])];
    if (now == 4) ++as_mask;
    if (now == 9) ++unchanged;
    CHECK(now >= 4);
  }
  const double n = static_cast<double>(masked.positions.size());
  CHECK(as_mask / n == doctest::Approx(0.8).epsilon(0.05));
  // Unchanged covers the 10% keep branch plus random draws that hit the same id.
  CHECK(unchanged / n == doctest::Approx(0.1 + 0.1 / 6).epsilon(0.2));
  CHECK(mask_tokens(ids, 0.0, 12, 4, 6, rng).positions.empty());
}

TEST_CASE("masked-LM pretraining") {
  auto cfg = small_config();
  cfg.hidden_dim = 16;
  cfg.init_std = 0.02;
  std::vector<std::vector<int>> corpus;
  for (int s = 0; s < 10; ++s) corpus.push_back({6 + s % 3, 9, 10, 6 + s % 3, 11, 9});

  SUBCASE("one epoch lowers the loss") {
    auto model = make_model<float>(cfg);
    MlmOptions options;
    options.epochs = 1;
    options.mask_rate = 0.3;
    options.batch_size = 1;
    options.adam.learning_rate = 1e-2;
    options.adam.warmup_fraction = 0.0;
    options.adam.accumulation = 1;
    const double before = mlm_evaluate(model, corpus, options, 77);
    mlm_pretrain(model, corpus, options);
    CHECK(mlm_evaluate(model, corpus, options, 77) < before);
  }
  SUBCASE("masking rate 0 leaves parameters unchanged") {
    auto model = make_model<float>(cfg);
    MlmOptions options;
    options.mask_rate = 0.0;
    const auto before = snapshot(model.parameters());
    const auto history = mlm_pretrain(model, corpus, options);
    CHECK(history == std::vector<double>(3, 0.0));
    CHECK(snapshot(model.parameters()) == before);
  }
  CHECK(MlmOptions{}.epochs == 3);
  auto model = make_model<float>(cfg);
  CHECK_THROWS_AS(mlm_pretrain(model, {}, MlmOptions{}), ContractError);
}
