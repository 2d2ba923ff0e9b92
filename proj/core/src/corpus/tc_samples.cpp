#include "propspan/corpus/tc_samples.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "propspan/corpus/text.hpp"
#include "propspan/error.hpp"

namespace propspan::corpus {

namespace {

std::string describe(const SpanAnnotation& span) {
  return "span " + span.article_id + " [" + std::to_string(span.begin) + ", " +
         std::to_string(span.end) + ")";
}

}  // namespace

std::vector<TcSample> build_tc_samples(std::span<const Token> window,
                                       std::span<const SpanAnnotation> spans,
                                       const Vocabulary& vocabulary, const LabelSet& labels) {
  const auto window_ids = vocabulary.encode(window);

  std::map<std::pair<Offset, Offset>, std::vector<const SpanAnnotation*>> groups;
  for (const auto& span : spans) groups[{span.begin, span.end}].push_back(&span);

  std::vector<TcSample> samples;
  samples.reserve(groups.size());
  for (const auto& [offsets, members] : groups) {
    const auto& first_span = *members.front();
    std::size_t first = window.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < window.size(); ++t) {
      if (window[t].begin < offsets.second && offsets.first < window[t].end) {
        first = std::min(first, t);
        last = t;
      }
    }
    if (first == window.size()) {
      throw AlignmentError(describe(first_span) + " overlaps no token of its window");
    }

    TcSample sample;
    sample.article_id = first_span.article_id;
    sample.begin = offsets.first;
    sample.end = offsets.second;
    sample.row_count = members.size();
    sample.labels.assign(labels.size(), 0);
    for (const auto* member : members) {
      if (!member->technique) continue;
      const auto index = labels.index_of(*member->technique);
      if (!index) {
        throw ContractError(describe(*member) + " has technique '" + *member->technique +
                            "' outside the label set");
      }
      sample.labels[*index] = 1;
    }

    auto& ids = sample.token_ids;
    ids.reserve(window_ids.size() + 2);
    ids.insert(ids.end(), window_ids.begin(), window_ids.begin() + static_cast<std::ptrdiff_t>(first));
    ids.push_back(Vocabulary::kMarker);
    ids.insert(ids.end(), window_ids.begin() + static_cast<std::ptrdiff_t>(first),
               window_ids.begin() + static_cast<std::ptrdiff_t>(last + 1));
    ids.push_back(Vocabulary::kMarker);
    ids.insert(ids.end(), window_ids.begin() + static_cast<std::ptrdiff_t>(last + 1), window_ids.end());
    sample.span_tokens = {first + 1, last + 2};
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<TcSample> build_tc_dataset(std::span<const Article> articles,
                                       std::span<const SpanAnnotation> spans,
                                       const Vocabulary& vocabulary, const LabelSet& labels) {
  std::map<std::string, std::vector<SpanAnnotation>> by_article;
  for (const auto& span : spans) by_article[span.article_id].push_back(span);
  for (const auto& [id, unused] : by_article) {
    const bool known = std::any_of(articles.begin(), articles.end(),
                                   [&](const Article& a) { return a.id == id; });
    if (!known) throw ContractError("spans reference unknown article " + id);
  }

  std::vector<TcSample> samples;
  for (const auto& article : articles) {
    const auto found = by_article.find(article.id);
    if (found == by_article.end()) continue;
    const auto sentences = split_sentences(article);

    std::map<std::pair<std::size_t, std::size_t>, std::vector<SpanAnnotation>> windows;
    for (const auto& span : found->second) {
      if (span.end > article.text.size()) {
        throw RangeError(describe(span) + " outside article of length " +
                         std::to_string(article.text.size()));
      }
      std::size_t first = sentences.size();
      std::size_t last = 0;
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (sentences[s].begin < span.end && span.begin < sentences[s].end) {
          first = std::min(first, s);
          last = s;
        }
      }
      if (first == sentences.size()) {
        throw AlignmentError(describe(span) + " overlaps no sentence");
      }
      windows[{first, last}].push_back(span);
    }

    std::vector<TcSample> article_samples;
    for (const auto& [range, members] : windows) {
      std::vector<Token> window;
      for (std::size_t s = range.first; s <= range.second; ++s) {
        window.insert(window.end(), sentences[s].tokens.begin(), sentences[s].tokens.end());
      }
      auto built = build_tc_samples(window, members, vocabulary, labels);
      std::move(built.begin(), built.end(), std::back_inserter(article_samples));
    }
    std::sort(article_samples.begin(), article_samples.end(), [](const TcSample& a, const TcSample& b) {
      return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
    });
    std::move(article_samples.begin(), article_samples.end(), std::back_inserter(samples));
  }
  return samples;
}

}  // namespace propspan::corpus
