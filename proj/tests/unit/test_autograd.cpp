#include <cmath>
#include <random>

#include "doctest.h"
#include "propspan/autograd/checkpoint.hpp"
#include "propspan/autograd/grad_check.hpp"
#include "propspan/autograd/losses.hpp"
#include "propspan/autograd/ops.hpp"
#include "propspan/autograd/optimizer.hpp"
#include "propspan/corpus/io.hpp"
#include "temp_dir.hpp"

using namespace propspan;
using namespace propspan::ag;

namespace {

using Real = long double;
using T64 = Tensor<Real>;

T64 random_param(Shape shape, std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> dist(-spread, spread);
  std::vector<Real> values(shape_size(shape));
  for (auto& v : values) v = static_cast<Real>(dist(rng));
  return T64::parameter(std::move(shape), std::move(values));
}

/// sum(out * probe) with a fixed random probe, so upstream gradients are not all ones.
T64 probe_loss(const T64& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Real> probe(out.size());
  for (auto& p : probe) p = static_cast<Real>(dist(rng));
  return sum(mul(out, T64::constant(out.shape(), std::move(probe))));
}

double check_op(const ParameterList<Real>& params, const std::function<T64()>& forward) {
  return grad_check<Real>([&] { return probe_loss(forward(), 99); }, params, 1e-5).max_relative_error;
}

}  // namespace

TEST_CASE("forward values of core ops") {
  const auto eye = Tensor<double>::constant({2, 2}, {1, 0, 0, 1});
  const auto a = Tensor<double>::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto product = matmul(eye, a);
  CHECK(std::vector<double>(product.values().begin(), product.values().end()) ==
        std::vector<double>{1, 2, 3, 4, 5, 6});

  const auto uniform = softmax(Tensor<double>::constant({1, 3}, {0, 0, 0}), 1);
  for (double p : uniform.values()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto ln = layer_norm(Tensor<double>::constant({1, 4}, {3, 3, 3, 3}), Tensor<double>::constant({4}, {2, 2, 2, 2}),
                             Tensor<double>::constant({4}, {0, 0, 0, 0}));
  for (double v : ln.values()) CHECK(v == 0.0);

  const auto t = transpose(a);
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.at(2, 1) == 6);

  const auto cat = concat<double>({a, a}, 1);
  CHECK(cat.shape() == Shape{2, 6});
  CHECK(cat.at(1, 4) == 5);
  CHECK(slice(a, 1, 1, 3).at(1, 0) == 5);

  const auto masked = causal_mask(Tensor<double>::constant({2, 2}, {1, 2, 3, 4}));
  CHECK(std::isinf(masked.at(0, 1)));
  CHECK(masked.at(1, 1) == 4);

  CHECK_THROWS_WITH_AS(matmul(a, a), doctest::Contains("matmul"), ContractError);
  CHECK_THROWS_AS(add(a, eye), ContractError);
  const std::vector<int> bad_id{7};
  CHECK_THROWS_AS(embedding_lookup(a, std::span<const int>(bad_id)), ContractError);
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(12);
    for (auto& v : x) v = dist(rng);
    auto shifted = x;
    for (auto& v : shifted) v += 17.25;
    for (std::size_t axis : {0u, 1u}) {
      const auto p = softmax(Tensor<double>::constant({3, 4}, x), axis);
      const auto q = softmax(Tensor<double>::constant({3, 4}, shifted), axis);
      const std::size_t lanes = axis == 1 ? 3 : 4;
      for (std::size_t l = 0; l < lanes; ++l) {
        double total = 0.0;
        for (std::size_t e = 0; e < (axis == 1 ? 4u : 3u); ++e) {
          total += axis == 1 ? p.at(l, e) : p.at(e, l);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
      for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(p.values()[i] - q.values()[i]) < 1e-9);
    }
  }
}

TEST_CASE("every differentiable op passes the finite-difference oracle") {
  std::mt19937_64 rng(5);
  const auto a = random_param({3, 4}, rng);
  const auto b = random_param({4, 2}, rng);
  const auto c = random_param({3, 4}, rng);
  const auto bias = random_param({4}, rng);
  const auto gamma = random_param({4}, rng);
  const auto beta = random_param({4}, rng);
  const auto table = random_param({5, 3}, rng);
  const auto scalar_bias = random_param({1}, rng);
  const std::vector<int> ids{4, 0, 4, 2};

  CHECK(check_op({{"a", a}, {"b", b}}, [&] { return matmul(a, b); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return transpose(a); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"c", c}}, [&] { return add(a, c); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"c", c}}, [&] { return sub(a, c); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"c", c}}, [&] { return mul(a, c); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return scale(a, Real(-2.5)); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"bias", bias}}, [&] { return add_row_vector(a, bias); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"c", c}}, [&] { return concat<Real>({a, c}, 0); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"c", c}}, [&] { return concat<Real>({a, c}, 1); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return slice(a, 0, 1, 3); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return slice(a, 1, 1, 3); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return reshape(a, {2, 6}); }) < 1e-7);
  CHECK(check_op({{"table", table}}, [&] { return embedding_lookup(table, std::span<const int>(ids)); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return softmax(a, 0); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return softmax(a, 1); }) < 1e-7);
  CHECK(check_op({{"a", a}, {"gamma", gamma}, {"beta", beta}}, [&] { return layer_norm(a, gamma, beta); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return gelu(a); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return tanh(a); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return sigmoid(a); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return softmax(causal_mask(matmul(a, transpose(a)), 1), 1); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return sum(a); }) < 1e-7);
  CHECK(check_op({{"a", a}}, [&] { return mean(a); }) < 1e-7);
  const auto w = random_param({4, 1}, rng);
  CHECK(check_op({{"a", a}, {"w", w}, {"s", scalar_bias}}, [&] {
          const auto alpha = softmax(add_row_vector(matmul(a, w), scalar_bias), 0);
          return matmul(transpose(alpha), a);
        }) < 1e-7);

  const auto q = random_param({2, 4}, rng);
  const auto k = random_param({3, 4}, rng);
  const auto v = random_param({3, 2}, rng);
  CHECK(check_op({{"q", q}, {"k", k}, {"v", v}}, [&] { return scaled_dot_attention(q, k, v, false); }) < 1e-7);
  CHECK(check_op({{"q", q}, {"k", k}, {"v", v}}, [&] { return scaled_dot_attention(q, k, v, true); }) < 1e-7);

  const std::vector<int> gold{1, 3, 0};
  const std::vector<int> targets{1, 0, 1, 1};
  CHECK(grad_check<Real>([&] { return cross_entropy(a, std::span<const int>(gold)); }, {{"a", a}}, 1e-5)
            .max_relative_error < 1e-7);
  CHECK(grad_check<Real>([&] { return cross_entropy_label_smoothed(a, std::span<const int>(gold), 0.1); },
                         {{"a", a}}, 1e-5)
            .max_relative_error < 1e-7);
  CHECK(grad_check<Real>([&] { return binary_cross_entropy_multilabel(bias, std::span<const int>(targets)); },
                         {{"bias", bias}}, 1e-5)
            .max_relative_error < 1e-7);
}

TEST_CASE("grad_check on a quadratic is exact up to roundoff") {
  auto x = Tensor<double>::parameter({3}, {0.5, -1.25, 2.0});
  const auto result = grad_check<double>([&] { return sum(mul(x, x)); }, {{"x", x}}, 1e-5);
  CHECK(result.max_relative_error < 1e-9);
  CHECK(result.coordinates == 3);
  auto y = Tensor<double>::parameter({1}, {-1.0});
  CHECK_THROWS_AS(grad_check<double>([&] { return sum(scale(y, std::numeric_limits<double>::infinity())); },
                                     {{"y", y}}, 1e-5),
                  Error);
}

TEST_CASE("backward fills exact gradients and accumulates across calls") {
  auto x = Tensor<double>::parameter({3}, {1.0, -2.0, 0.5});
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
  x.zero_grad();
  backward(sum(mul(x, x)));
  CHECK(x.grad()[1] == -4.0);
  backward(sum(mul(x, x)));
  CHECK(x.grad()[1] == -8.0);

  // A node reached along two paths contributes once per path.
  auto y = Tensor<double>::parameter({1}, {3.0});
  const auto twice = add(y, y);
  y.zero_grad();
  backward(mul(twice, twice));  // 4 y^2
  CHECK(y.grad()[0] == 24.0);
  CHECK(Tape<double>::record(mul(twice, twice)).size() == 3);

  CHECK_THROWS_AS(backward(x), ContractError);
}

TEST_CASE("no-grad guard stops graph recording") {
  auto x = Tensor<float>::parameter({2}, {1.0f, 2.0f});
  NoGradGuard guard;
  const auto y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("label-smoothed cross-entropy") {
  SUBCASE("confident and correct") {
    const auto logits = Tensor<double>::constant({1, 2}, {0.0, 60.0});
    const std::vector<int> gold{1};
    CHECK(cross_entropy_label_smoothed(logits, std::span<const int>(gold), 0.0).item() < 1e-20);
  }
  SUBCASE("uniform prediction is unaffected by smoothing") {
    const auto logits = Tensor<double>::constant({1, 2}, {0.3, 0.3});
    const std::vector<int> gold{0};
    CHECK(cross_entropy_label_smoothed(logits, std::span<const int>(gold), 0.1).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("eps = 0 equals plain cross-entropy") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> dist(0.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(15);
      for (auto& v : x) v = dist(rng);
      std::vector<int> gold(3);
      for (auto& g : gold) g = static_cast<int>(rng() % 5);
      const auto logits = Tensor<double>::constant({3, 5}, x);
      const double smoothed = cross_entropy_label_smoothed(logits, std::span<const int>(gold), 0.0).item();
      // Independent route: -log(exp(x_g) / sum exp(x)) per row.
      double oracle = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        double z = 0.0;
        for (std::size_t k = 0; k < 5; ++k) z += std::exp(x[r * 5 + k]);
        oracle -= std::log(std::exp(x[r * 5 + static_cast<std::size_t>(gold[r])]) / z);
      }
      CHECK(std::abs(smoothed - oracle / 3.0) < 1e-12);
      CHECK(std::abs(smoothed - cross_entropy(logits, std::span<const int>(gold)).item()) < 1e-12);
    }
  }
  const auto logits = Tensor<double>::constant({1, 2}, {0.0, 0.0});
  const std::vector<int> gold{0};
  CHECK_THROWS_AS(cross_entropy_label_smoothed(logits, std::span<const int>(gold), 1.0), ContractError);
  CHECK_THROWS_AS(cross_entropy_label_smoothed(logits, std::span<const int>(gold), -0.1), ContractError);
  const std::vector<int> out_of_range{2};
  CHECK_THROWS_AS(cross_entropy(logits, std::span<const int>(out_of_range)), ContractError);
}

TEST_CASE("multilabel binary cross-entropy") {
  const std::vector<int> zeros{0, 0, 0};
  CHECK(binary_cross_entropy_multilabel(Tensor<double>::constant({3}, {0, 0, 0}), std::span<const int>(zeros)).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  auto big = Tensor<double>::parameter({1}, {40.0});
  const std::vector<int> one{1};
  const auto loss = binary_cross_entropy_multilabel(big, std::span<const int>(one));
  CHECK(std::isfinite(loss.item()));
  CHECK(loss.item() < 1e-15);
  backward(loss);
  CHECK(std::isfinite(big.grad()[0]));
  auto huge = Tensor<double>::constant({1}, {-1000.0});
  CHECK(binary_cross_entropy_multilabel(huge, std::span<const int>(one)).item() == doctest::Approx(1000.0));

  const std::vector<int> target{1, 0};
  for (double x : {-3.0, 0.2, 5.0}) {
    const double l1 = binary_cross_entropy_multilabel(Tensor<double>::constant({2}, {x, -x}), std::span<const int>(target)).item();
    const double l2 = binary_cross_entropy_multilabel(Tensor<double>::constant({2}, {-x, x}), std::span<const int>(std::vector<int>{0, 1})).item();
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));
  }
}

TEST_CASE("learning-rate schedule") {
  CHECK(learning_rate_factor(0, 100, 0.1) == 0.0);
  CHECK(learning_rate_factor(5, 100, 0.1) == 0.5);
  CHECK(learning_rate_factor(10, 100, 0.1) == 1.0);
  CHECK(learning_rate_factor(55, 100, 0.1) == doctest::Approx(0.5));
  CHECK(learning_rate_factor(100, 100, 0.1) == 0.0);
  CHECK(learning_rate_factor(150, 100, 0.1) == 0.0);
  CHECK(learning_rate_factor(0, 10, 0.0) == 1.0);
  CHECK_THROWS_AS(learning_rate_factor(0, 0, 0.1), ContractError);
  CHECK_THROWS_AS(learning_rate_factor(0, 10, 1.5), ContractError);
}

TEST_CASE("adam_step follows the bias-corrected update") {
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.warmup_fraction = 0.0;
  cfg.total_steps = 10;
  cfg.accumulation = 1;
  OptimizerState state(cfg);
  auto w = Tensor<double>::parameter({2}, {1.0, -1.0});
  const ParameterList<double> params{{"w", w}};
  backward(sum(mul(w, w)));  // grad = 2w
  adam_step(state, params);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * sign(g) (up to epsilon).
  CHECK(w.values()[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(w.values()[1] == doctest::Approx(-0.9).epsilon(1e-7));
  CHECK(w.grad()[0] == 0.0);
  CHECK(state.step == 1);
  // Second step runs at lr * 0.9 (linear decay, no warmup).
  CHECK(state.current_learning_rate() == doctest::Approx(0.09));
}

TEST_CASE("two accumulated half-batches equal one full batch") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> data(8), init(3);
  for (auto& d : data) d = dist(rng);
  for (auto& i : init) i = dist(rng);

  auto batch_loss = [&](const Tensor<double>& w, std::size_t from, std::size_t to) {
    auto x = Tensor<double>::constant({to - from, 1}, std::vector<double>(data.begin() + from, data.begin() + to));
    auto features = concat<double>({x, mul(x, x), tanh(x)}, 1);
    return mean(tanh(matmul(features, reshape(w, {3, 1}))));
  };

  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.total_steps = 4;

  auto full = Tensor<double>::parameter({3}, init);
  auto halves = Tensor<double>::parameter({3}, init);
  cfg.accumulation = 1;
  OptimizerState full_state(cfg);
  cfg.accumulation = 2;
  OptimizerState half_state(cfg);
  for (int step = 0; step < 3; ++step) {
    backward(batch_loss(full, 0, 8));
    adam_step(full_state, ParameterList<double>{{"w", full}});
    backward(batch_loss(halves, 0, 4));
    backward(batch_loss(halves, 4, 8));
    adam_step(half_state, ParameterList<double>{{"w", halves}});
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(full.values()[i] - halves.values()[i]) < 1e-9);
}

TEST_CASE("checkpoint container round-trips names, shapes and float32 values") {
  testing::TempDir dir;
  auto a = Tensor<float>::parameter({2, 2}, {1.5f, -0.0f, 3.25e-8f, 7.0f});
  auto b = Tensor<float>::parameter({3}, {0.1f, 0.2f, 0.3f});
  const ParameterList<float> params{{"layer.a", a}, {"b", b}};
  save_checkpoint(dir / "m.ckpt", "{\"k\":1}", params);
  const auto bytes = corpus::read_file(dir / "m.ckpt");
  CHECK(bytes.substr(0, 8) == "PROPSPAN");
  CHECK(bytes.size() == 8 + 4 + 8 + 7 + 4 + (4 + 7 + 4 + 16 + 16) + (4 + 1 + 4 + 8 + 12));

  const auto ckpt = load_checkpoint(dir / "m.ckpt");
  CHECK(ckpt.config == "{\"k\":1}");
  REQUIRE(ckpt.tensors.size() == 2);
  CHECK(ckpt.tensors[0].shape == Shape{2, 2});

  auto a2 = Tensor<float>::parameter({2, 2}, std::vector<float>(4, 0.0f));
  auto b2 = Tensor<float>::parameter({3}, std::vector<float>(3, 0.0f));
  restore_parameters(ckpt, {{"b", b2}, {"layer.a", a2}});
  CHECK(a2.values()[2] == 3.25e-8f);
  CHECK(b2.values()[1] == 0.2f);

  auto wrong = Tensor<float>::parameter({4}, std::vector<float>(4, 0.0f));
  CHECK_THROWS_AS(restore_parameters(ckpt, {{"b", b2}, {"layer.a", wrong}}), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint("NOTACKPT"), FormatError);
}

TEST_CASE("dropout scales kept units and is the identity at rate zero") {
  Rng rng(4);
  const auto x = Tensor<float>::constant({1, 1000}, std::vector<float>(1000, 1.0f));
  CHECK(dropout(x, 0.0, rng).node() == x.node());
  const auto y = dropout(x, 0.25, rng);
  std::size_t zeros = 0;
  for (float v : y.values()) {
    if (v == 0.0f) ++zeros;
    else CHECK(v == doctest::Approx(1.0f / 0.75f));
  }
  CHECK(zeros > 150);
  CHECK(zeros < 350);
}
