#pragma once

#include <span>
#include <string>
#include <vector>

#include "propspan/corpus/label_set.hpp"
#include "propspan/corpus/types.hpp"
#include "propspan/corpus/vocabulary.hpp"

namespace propspan::corpus {

/// One marked span inside its sentence window.
struct TcSample {
  std::string article_id;
  Offset begin = 0;
  Offset end = 0;
  /// Window token ids with a marker before and after the span.
  std::vector<int> token_ids;
  /// Positions of the in-span tokens within `token_ids`, markers excluded.
  IndexRange span_tokens;
  /// Binary, one entry per technique. All zero for unlabeled spans.
  std::vector<int> labels;
  /// Number of annotation rows that share this (begin, end).
  std::size_t row_count = 1;
};

/// Builds one sample per distinct (begin, end) among `spans`, ordered by offsets.
/// Rows with identical offsets are merged and their techniques unioned.
/// Throws AlignmentError when a span overlaps no token of the window.
std::vector<TcSample> build_tc_samples(std::span<const Token> window,
                                       std::span<const SpanAnnotation> spans,
                                       const Vocabulary& vocabulary, const LabelSet& labels);

/// Applies build_tc_samples per article, using as window every sentence a span
/// overlaps. Output follows article order, then span offsets.
std::vector<TcSample> build_tc_dataset(std::span<const Article> articles,
                                       std::span<const SpanAnnotation> spans,
                                       const Vocabulary& vocabulary, const LabelSet& labels);

}  // namespace propspan::corpus
