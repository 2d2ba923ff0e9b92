#include <benchmark/benchmark.h>

#include <random>

#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/parameters.hpp"
#include "propspan/encoder/encoder.hpp"
#include "propspan/eval/scoring.hpp"
#include "propspan/si/heads.hpp"

using namespace propspan;
using namespace propspan::ag;

namespace {

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool param = false) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return param ? Tensor<float>::parameter({rows, cols}, v) : Tensor<float>::constant({rows, cols}, v);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto a = random_matrix(n, n, rng, true), b = random_matrix(n, n, rng, true);
  const ParameterList<float> params{{"a", a}, {"b", b}};
  for (auto _ : state) {
    backward(sum(matmul(a, b)));
    zero_grads(params);
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64);

encoder::EncoderConfig bench_encoder() {
  encoder::EncoderConfig cfg;
  cfg.vocab_size = 500;
  return cfg;
}

void BM_EncoderForward(benchmark::State& state) {
  Rng rng(3);
  const encoder::EncoderModel<float> model(bench_encoder(), rng);
  std::vector<int> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 6 + static_cast<int>(i * 7 % 490);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.encode(ids));
}
BENCHMARK(BM_EncoderForward)->Arg(16)->Arg(64)->Arg(128);

void BM_EncoderMlmStep(benchmark::State& state) {
  Rng rng(4);
  const encoder::EncoderModel<float> model(bench_encoder(), rng);
  std::vector<int> ids(32);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 6 + static_cast<int>(i * 11 % 490);
  const std::vector<int> positions{3, 9, 20};
  const std::vector<int> targets{ids[3], ids[9], ids[20]};
  const auto params = model.parameters();
  for (auto _ : state) {
    backward(model.mlm_loss(ids, positions, targets));
    zero_grads(params);
  }
}
BENCHMARK(BM_EncoderMlmStep);

void BM_CrfForwardBackward(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  const auto emissions = random_matrix(steps, 2, rng, true);
  auto crf = si::CrfParams<float>::zeros(2);
  std::vector<int> gold(steps);
  for (auto& g : gold) g = static_cast<int>(rng() % 2);
  const ParameterList<float> params{{"emissions", emissions}};
  for (auto _ : state) {
    backward(si::crf_nll(emissions, gold, crf));
    zero_grads(params);
  }
}
BENCHMARK(BM_CrfForwardBackward)->Arg(32)->Arg(128);

void BM_CrfViterbi(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto emissions = random_matrix(static_cast<std::size_t>(state.range(0)), 3, rng);
  const auto crf = si::CrfParams<float>::zeros(3);
  for (auto _ : state) benchmark::DoNotOptimize(si::crf_viterbi(emissions, crf));
}
BENCHMARK(BM_CrfViterbi)->Arg(32)->Arg(128);

void BM_SiScore(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  auto spans = [&] {
    std::vector<corpus::SpanAnnotation> out;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t b = rng() % 5000;
      out.push_back({std::to_string(rng() % 20), b, b + 1 + rng() % 80, std::nullopt});
    }
    return out;
  };
  const auto pred = spans(), gold = spans();
  for (auto _ : state) benchmark::DoNotOptimize(eval::si_score(pred, gold));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * count));
}
BENCHMARK(BM_SiScore)->Arg(100)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
