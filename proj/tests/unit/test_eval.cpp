#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "propspan/corpus/text.hpp"
#include "propspan/error.hpp"
#include "propspan/eval/scoring.hpp"

using namespace propspan;
using corpus::SpanAnnotation;
using eval::si_score;
using eval::tc_micro_f;

namespace {

SpanAnnotation si(std::string article, std::size_t b, std::size_t e) { return {std::move(article), b, e, {}}; }
SpanAnnotation tc(std::string article, std::size_t b, std::size_t e, std::string t) {
  return {std::move(article), b, e, std::move(t)};
}

// Explicit character-index sets, pairwise intersections.
eval::ScoreReport brute_force_si(const std::vector<SpanAnnotation>& predicted,
                                 const std::vector<SpanAnnotation>& gold) {
  auto chars = [](const SpanAnnotation& s) {
    std::set<std::size_t> out;
    for (std::size_t c = s.begin; c < s.end; ++c) out.insert(c);
    return out;
  };
  eval::ScoreReport r;
  if (predicted.empty() && gold.empty()) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  double p = 0.0, q = 0.0;
  for (const auto& s : predicted) {
    const auto cs = chars(s);
    for (const auto& t : gold) {
      if (s.article_id != t.article_id) continue;
      const auto ct = chars(t);
      std::size_t shared = 0;
      for (auto c : cs) shared += ct.count(c);
      p += static_cast<double>(shared) / static_cast<double>(cs.size());
      q += static_cast<double>(shared) / static_cast<double>(ct.size());
    }
  }
  r.precision = predicted.empty() ? 0.0 : p / static_cast<double>(predicted.size());
  r.recall = gold.empty() ? 0.0 : q / static_cast<double>(gold.size());
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::vector<SpanAnnotation> random_spans(std::mt19937_64& rng, std::size_t max_count) {
  std::vector<SpanAnnotation> out(rng() % (max_count + 1));
  for (auto& s : out) {
    s.article_id = std::to_string(rng() % 2);
    s.begin = rng() % 30;
    s.end = s.begin + 1 + rng() % 12;
  }
  return out;
}

}  // namespace

TEST_CASE("si_score fixtures") {
  const std::vector<SpanAnnotation> gold{si("1", 0, 10)};
  const std::vector<SpanAnnotation> pred{si("1", 0, 5)};
  const auto r = si_score(pred, gold);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == 2.0 / 3.0);

  const auto perfect = si_score(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const std::vector<SpanAnnotation> disjoint{si("1", 20, 30)};
  const auto zero = si_score(disjoint, gold);
  CHECK(zero.precision == 0.0);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);

  const std::vector<SpanAnnotation> other_article{si("2", 0, 10)};
  CHECK(si_score(other_article, gold).f1 == 0.0);

  const std::vector<SpanAnnotation> none;
  const auto empty_pred = si_score(none, gold);
  CHECK(empty_pred.precision == 0.0);
  CHECK(empty_pred.f1 == 0.0);
  CHECK(si_score(none, none).f1 == 1.0);

  const std::vector<SpanAnnotation> malformed{si("1", 4, 4)};
  CHECK_THROWS_AS(si_score(malformed, gold), ContractError);
  CHECK_THROWS_AS(si_score(gold, malformed), ContractError);

  // Duplicate gold spans count as separate items.
  const std::vector<SpanAnnotation> doubled{si("1", 0, 10), si("1", 0, 10)};
  const auto dup = si_score(gold, doubled);
  CHECK(dup.precision == 2.0);
  CHECK(dup.recall == 1.0);
}

TEST_CASE("si_score matches the character-set oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto pred = random_spans(rng, 5);
    const auto gold = random_spans(rng, 5);
    const auto fast = si_score(pred, gold);
    const auto slow = brute_force_si(pred, gold);
    CHECK(std::abs(fast.precision - slow.precision) < 1e-9);
    CHECK(std::abs(fast.recall - slow.recall) < 1e-9);
    CHECK(std::abs(fast.f1 - slow.f1) < 1e-9);
    // Swapping sides swaps precision and recall.
    if (!pred.empty() && !gold.empty()) {
      const auto swapped = si_score(gold, pred);
      CHECK(std::abs(swapped.precision - fast.recall) < 1e-12);
      CHECK(std::abs(swapped.recall - fast.precision) < 1e-12);
    }
  }
}

TEST_CASE("merging touching predictions keeps the covered characters") {
  std::mt19937_64 rng(29);
  corpus::Article article{"1", std::u32string(60, U'x')};
  for (int trial = 0; trial < 200; ++trial) {
    auto spans = random_spans(rng, 6);
    for (auto& s : spans) s.article_id = "1";
    const auto merged = corpus::merge_whitespace_adjacent(article, spans);
    std::set<std::size_t> before, after;
    for (const auto& s : spans)
      for (auto c = s.begin; c < s.end; ++c) before.insert(c);
    for (const auto& s : merged)
      for (auto c = s.begin; c < s.end; ++c) after.insert(c);
    CHECK(before == after);
  }
}

TEST_CASE("tc_micro_f") {
  const std::vector<SpanAnnotation> gold{tc("1", 0, 5, "A"), tc("1", 6, 9, "B"), tc("2", 0, 3, "A"),
                                         tc("2", 4, 8, "C")};
  SUBCASE("all correct") { CHECK(tc_micro_f(gold, gold).f1 == 1.0); }
  SUBCASE("all wrong") {
    const std::vector<SpanAnnotation> pred{tc("1", 0, 5, "B"), tc("1", 6, 9, "A"), tc("2", 0, 3, "C"),
                                           tc("2", 4, 8, "A")};
    CHECK(tc_micro_f(pred, gold).f1 == 0.0);
  }
  SUBCASE("three of four") {
    const std::vector<SpanAnnotation> pred{tc("1", 0, 5, "A"), tc("1", 6, 9, "B"), tc("2", 0, 3, "A"),
                                           tc("2", 4, 8, "B")};
    const std::vector<std::string> classes{"A", "B", "C", "D"};
    const auto r = tc_micro_f(pred, gold, classes);
    CHECK(r.f1 == 0.75);
    CHECK(r.per_class.at("C").recall == 0.0);
    CHECK(r.per_class.at("B").precision == 0.5);
    CHECK(r.per_class.at("A").f1 == 1.0);
    CHECK(r.per_class.at("D").support == 0);
    std::size_t supports = 0;
    for (const auto& [_, s] : r.per_class) supports += s.support;
    CHECK(supports == gold.size());
  }
  SUBCASE("multi-label span matches as a multiset") {
    const std::vector<SpanAnnotation> g{tc("1", 0, 5, "A"), tc("1", 0, 5, "B")};
    const std::vector<SpanAnnotation> p{tc("1", 0, 5, "A"), tc("1", 0, 5, "A")};
    const auto r = tc_micro_f(p, g);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
  }
  SUBCASE("unmatched prediction") {
    const std::vector<SpanAnnotation> pred{tc("3", 0, 5, "A")};
    CHECK_THROWS_WITH_AS(tc_micro_f(pred, gold), doctest::Contains("3\tA\t0\t5"), ContractError);
  }
}

TEST_CASE("report output") {
  eval::ScoreReport r;
  r.precision = 1.0;
  r.recall = 0.5;
  r.f1 = 2.0 / 3.0;
  r.per_class["Doubt"] = {0.25, 1.0, 0.4, 3};
  std::ostringstream tsv;
  eval::write_report_tsv(tsv, r);
  CHECK(tsv.str() ==
        "metric\tvalue\nprecision\t1.000000\nrecall\t0.500000\nf1\t0.666667\nDoubt.precision\t0.250000\n"
        "Doubt.recall\t1.000000\nDoubt.f1\t0.400000\nDoubt.support\t3\n");
  std::ostringstream text;
  eval::write_report_text(text, r);
  CHECK(text.str().find("overall    1.000000   0.500000  0.666667") != std::string::npos);
}
