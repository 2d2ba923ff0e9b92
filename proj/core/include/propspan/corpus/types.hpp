#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace propspan::corpus {

/// Character offset into an article, counted in Unicode scalar values.
using Offset = std::size_t;

/// Binary token tags: 0 normal text, 1 propaganda.
using TagSequence = std::vector<int>;

struct Article {
  std::string id;
  std::u32string text;
};

/// A labeled character interval [begin, end). `technique` is set only for TC rows.
struct SpanAnnotation {
  std::string article_id;
  Offset begin = 0;
  Offset end = 0;
  std::optional<std::string> technique;

  friend bool operator==(const SpanAnnotation&, const SpanAnnotation&) = default;
};

struct Token {
  std::u32string surface;
  Offset begin = 0;
  Offset end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// A contiguous run of an article's tokens; begin/end cover the first and last token.
struct Sentence {
  std::string article_id;
  Offset begin = 0;
  Offset end = 0;
  std::vector<Token> tokens;
  std::optional<TagSequence> tags;
};

enum class LabelMode { si, tc };

/// Half-open index interval.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

}  // namespace propspan::corpus
