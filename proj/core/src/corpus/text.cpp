#include "propspan/corpus/text.hpp"

#include <algorithm>

#include "propspan/corpus/utf8.hpp"
#include "propspan/error.hpp"

namespace propspan::corpus {

namespace {

bool is_terminator(const Token& token) {
  return token.surface.size() == 1 &&
         (token.surface[0] == U'.' || token.surface[0] == U'!' || token.surface[0] == U'?');
}

bool is_closer(const Token& token) {
  if (token.surface.size() != 1) return false;
  switch (token.surface[0]) {
    case U'"':
    case U'\'':
    case U')':
    case U']':
    case U'}':
    case U'»':
    case U'’':
    case U'”':
    case U'›':
      return true;
    default:
      return false;
  }
}

bool overlaps(Offset a_begin, Offset a_end, Offset b_begin, Offset b_end) {
  return a_begin < b_end && b_begin < a_end;
}

}  // namespace

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  std::size_t word_start = 0;
  bool in_word = false;
  auto flush = [&](std::size_t end) {
    if (in_word) {
      tokens.push_back({std::u32string(text.substr(word_start, end - word_start)), word_start, end});
      in_word = false;
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (utf8::is_space(c)) {
      flush(i);
    } else if (utf8::is_alnum(c)) {
      if (!in_word) {
        in_word = true;
        word_start = i;
      }
    } else {
      flush(i);
      tokens.push_back({std::u32string(1, c), i, i + 1});
    }
  }
  flush(text.size());
  return tokens;
}

std::vector<Sentence> split_sentences(const Article& article) {
  const auto tokens = tokenize(article.text);
  std::vector<Sentence> sentences;
  Sentence current;
  current.article_id = article.id;

  auto close = [&] {
    if (current.tokens.empty()) return;
    current.begin = current.tokens.front().begin;
    current.end = current.tokens.back().end;
    sentences.push_back(std::move(current));
    current = Sentence{};
    current.article_id = article.id;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    current.tokens.push_back(tokens[i]);
    if (!is_terminator(tokens[i])) continue;
    while (i + 1 < tokens.size() && tokens[i + 1].begin == tokens[i].end && is_closer(tokens[i + 1])) {
      current.tokens.push_back(tokens[++i]);
    }
    const Offset next = tokens[i].end;
    if (next == article.text.size() || utf8::is_space(article.text[next])) close();
  }
  close();
  return sentences;
}

std::vector<Sentence> project_spans_to_tags(const Article& article,
                                            std::span<const Sentence> sentences,
                                            std::span<const SpanAnnotation> spans) {
  for (const auto& span : spans) {
    if (span.article_id != article.id) {
      throw ContractError("span of article " + span.article_id + " projected onto article " +
                          article.id);
    }
    if (span.begin >= span.end || span.end > article.text.size()) {
      throw RangeError("span [" + std::to_string(span.begin) + ", " + std::to_string(span.end) +
                       ") outside article " + article.id + " of length " +
                       std::to_string(article.text.size()));
    }
  }
  std::vector<Sentence> tagged(sentences.begin(), sentences.end());
  for (auto& sentence : tagged) {
    TagSequence tags(sentence.tokens.size(), 0);
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      const auto& token = sentence.tokens[t];
      tags[t] = std::any_of(spans.begin(), spans.end(), [&](const SpanAnnotation& s) {
                  return overlaps(token.begin, token.end, s.begin, s.end);
                })
                    ? 1
                    : 0;
    }
    sentence.tags = std::move(tags);
  }
  return tagged;
}

std::vector<SpanAnnotation> tags_to_spans(const Sentence& sentence, std::span<const int> tags) {
  if (tags.size() != sentence.tokens.size()) {
    throw ContractError("tags_to_spans: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(sentence.tokens.size()) + " tokens");
  }
  std::vector<SpanAnnotation> spans;
  std::size_t t = 0;
  while (t < tags.size()) {
    if (tags[t] != 0 && tags[t] != 1) {
      throw ContractError("tags_to_spans: non-binary tag " + std::to_string(tags[t]));
    }
    if (tags[t] == 0) {
      ++t;
      continue;
    }
    std::size_t last = t;
    while (last + 1 < tags.size() && tags[last + 1] == 1) ++last;
    spans.push_back({sentence.article_id, sentence.tokens[t].begin, sentence.tokens[last].end, {}});
    t = last + 1;
  }
  return spans;
}

std::vector<SpanAnnotation> merge_whitespace_adjacent(const Article& article,
                                                      std::vector<SpanAnnotation> spans) {
  std::sort(spans.begin(), spans.end(), [](const SpanAnnotation& a, const SpanAnnotation& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::vector<SpanAnnotation> merged;
  for (auto& span : spans) {
    span.technique.reset();
    if (!merged.empty()) {
      auto& last = merged.back();
      bool joinable = span.begin <= last.end;
      if (!joinable) {
        joinable = std::all_of(article.text.begin() + static_cast<std::ptrdiff_t>(last.end),
                               article.text.begin() + static_cast<std::ptrdiff_t>(span.begin),
                               utf8::is_space);
      }
      if (joinable) {
        last.end = std::max(last.end, span.end);
        continue;
      }
    }
    merged.push_back(std::move(span));
  }
  return merged;
}

std::vector<SpanAnnotation> article_tags_to_spans(const Article& article,
                                                  std::span<const Sentence> sentences,
                                                  std::span<const TagSequence> tags) {
  if (tags.size() != sentences.size()) {
    throw ContractError("article_tags_to_spans: tag sequence count differs from sentence count");
  }
  std::vector<SpanAnnotation> spans;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto part = tags_to_spans(sentences[s], tags[s]);
    spans.insert(spans.end(), part.begin(), part.end());
  }
  return merge_whitespace_adjacent(article, std::move(spans));
}

}  // namespace propspan::corpus
