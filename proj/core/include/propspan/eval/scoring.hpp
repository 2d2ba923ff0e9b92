#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "propspan/corpus/types.hpp"

namespace propspan::eval {

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Gold rows of this class.
  std::size_t support = 0;
};

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// TC only, keyed by technique name.
  std::map<std::string, ClassScore> per_class;
};

/// 2PR / (P + R), or 0 when P + R = 0.
double f_measure(double precision, double recall);

/// Character-overlap scorer. For same-article pairs C(s, t, h) = |s ∩ t| / h;
/// P averages C(s, t, |s|) over predictions, R averages C(s, t, |t|) over gold.
/// Empty predictions give P = 0; both sides empty give P = R = F = 1.
/// Spans with begin >= end throw ContractError.
ScoreReport si_score(std::span<const corpus::SpanAnnotation> predicted,
                     std::span<const corpus::SpanAnnotation> gold);

/// Micro-averaged F over technique rows. Rows pair up by (article, begin, end);
/// within a span, predicted and gold techniques are matched as multisets.
/// A prediction for a span with no gold row throws ContractError naming it.
/// `classes` lists techniques to report even when absent from both sides.
ScoreReport tc_micro_f(std::span<const corpus::SpanAnnotation> predicted,
                       std::span<const corpus::SpanAnnotation> gold,
                       std::span<const std::string> classes = {});

/// (metric, value) pairs: precision, recall, f1, then per-class entries
/// named "<class>.precision" etc.
std::vector<std::pair<std::string, double>> report_rows(const ScoreReport& report);

/// Aligned human-readable table.
void write_report_text(std::ostream& out, const ScoreReport& report);
/// Tab-separated "metric\tvalue" lines with a header.
void write_report_tsv(std::ostream& out, const ScoreReport& report);

}  // namespace propspan::eval
