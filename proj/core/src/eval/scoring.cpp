#include "propspan/eval/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "propspan/error.hpp"

namespace propspan::eval {

using corpus::SpanAnnotation;

namespace {

std::string describe(const SpanAnnotation& s) {
  std::string out = s.article_id;
  if (s.technique) out += "\t" + *s.technique;
  return out + "\t" + std::to_string(s.begin) + "\t" + std::to_string(s.end);
}

void require_valid(std::span<const SpanAnnotation> spans, const char* side) {
  for (const auto& s : spans) {
    if (s.begin >= s.end) {
      throw ContractError(std::string("si_score: malformed ") + side + " span " + describe(s));
    }
  }
}

std::map<std::string, std::vector<const SpanAnnotation*>> by_article(std::span<const SpanAnnotation> spans) {
  std::map<std::string, std::vector<const SpanAnnotation*>> out;
  for (const auto& s : spans) out[s.article_id].push_back(&s);
  return out;
}

double overlap(const SpanAnnotation& a, const SpanAnnotation& b) {
  const auto lo = std::max(a.begin, b.begin);
  const auto hi = std::min(a.end, b.end);
  return hi > lo ? static_cast<double>(hi - lo) : 0.0;
}

std::string format_value(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6f", v);
  return buffer;
}

}  // namespace

double f_measure(double precision, double recall) {
  const double denominator = precision + recall;
  return denominator > 0.0 ? 2.0 * precision * recall / denominator : 0.0;
}

ScoreReport si_score(std::span<const SpanAnnotation> predicted, std::span<const SpanAnnotation> gold) {
  require_valid(predicted, "predicted");
  require_valid(gold, "gold");
  ScoreReport report;
  if (predicted.empty() && gold.empty()) {
    report.precision = report.recall = report.f1 = 1.0;
    return report;
  }
  const auto gold_by_article = by_article(gold);
  double precision_sum = 0.0, recall_sum = 0.0;
  for (const auto& [article, preds] : by_article(predicted)) {
    const auto it = gold_by_article.find(article);
    if (it == gold_by_article.end()) continue;
    for (const auto* s : preds) {
      for (const auto* t : it->second) {
        const double shared = overlap(*s, *t);
        if (shared == 0.0) continue;
        precision_sum += shared / static_cast<double>(s->end - s->begin);
        recall_sum += shared / static_cast<double>(t->end - t->begin);
      }
    }
  }
  report.precision = predicted.empty() ? 0.0 : precision_sum / static_cast<double>(predicted.size());
  report.recall = gold.empty() ? 0.0 : recall_sum / static_cast<double>(gold.size());
  report.f1 = f_measure(report.precision, report.recall);
  return report;
}

ScoreReport tc_micro_f(std::span<const SpanAnnotation> predicted, std::span<const SpanAnnotation> gold,
                       std::span<const std::string> classes) {
  using Key = std::tuple<std::string, corpus::Offset, corpus::Offset>;
  std::map<Key, std::map<std::string, std::size_t>> remaining;
  std::map<std::string, std::size_t> support, predicted_count, hits;
  for (const auto& c : classes) support[c];
  for (const auto& g : gold) {
    if (!g.technique) throw ContractError("tc_micro_f: gold row without technique: " + describe(g));
    ++remaining[{g.article_id, g.begin, g.end}][*g.technique];
    ++support[*g.technique];
  }
  std::size_t true_positives = 0;
  for (const auto& p : predicted) {
    if (!p.technique) throw ContractError("tc_micro_f: prediction without technique: " + describe(p));
    const auto it = remaining.find({p.article_id, p.begin, p.end});
    if (it == remaining.end()) throw ContractError("tc_micro_f: prediction matches no gold span: " + describe(p));
    ++predicted_count[*p.technique];
    support[*p.technique];
    auto& pool = it->second;
    if (auto slot = pool.find(*p.technique); slot != pool.end() && slot->second > 0) {
      --slot->second;
      ++hits[*p.technique];
      ++true_positives;
    }
  }
  ScoreReport report;
  const double tp = static_cast<double>(true_positives);
  report.precision = predicted.empty() ? 0.0 : tp / static_cast<double>(predicted.size());
  report.recall = gold.empty() ? 0.0 : tp / static_cast<double>(gold.size());
  report.f1 = f_measure(report.precision, report.recall);
  for (const auto& [name, count] : support) {
    ClassScore score;
    score.support = count;
    const double h = static_cast<double>(hits[name]);
    const auto made = predicted_count[name];
    score.precision = made ? h / static_cast<double>(made) : 0.0;
    score.recall = count ? h / static_cast<double>(count) : 0.0;
    score.f1 = f_measure(score.precision, score.recall);
    report.per_class[name] = score;
  }
  return report;
}

std::vector<std::pair<std::string, double>> report_rows(const ScoreReport& report) {
  std::vector<std::pair<std::string, double>> rows{
      {"precision", report.precision}, {"recall", report.recall}, {"f1", report.f1}};
  for (const auto& [name, score] : report.per_class) {
    rows.emplace_back(name + ".precision", score.precision);
    rows.emplace_back(name + ".recall", score.recall);
    rows.emplace_back(name + ".f1", score.f1);
    rows.emplace_back(name + ".support", static_cast<double>(score.support));
  }
  return rows;
}

void write_report_text(std::ostream& out, const ScoreReport& report) {
  std::size_t width = 9;
  for (const auto& [name, _] : report.per_class) width = std::max(width, name.size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
  out << pad("") << "precision  recall    f1        support\n";
  out << pad("overall") << format_value(report.precision) << "   " << format_value(report.recall) << "  "
      << format_value(report.f1) << "\n";
  for (const auto& [name, s] : report.per_class) {
    out << pad(name) << format_value(s.precision) << "   " << format_value(s.recall) << "  " << format_value(s.f1)
        << "  " << s.support << "\n";
  }
}

void write_report_tsv(std::ostream& out, const ScoreReport& report) {
  out << "metric\tvalue\n";
  for (const auto& [metric, value] : report_rows(report)) {
    out << metric << "\t";
    if (metric.ends_with(".support")) {
      out << static_cast<std::size_t>(value);
    } else {
      out << format_value(value);
    }
    out << "\n";
  }
}

}  // namespace propspan::eval
