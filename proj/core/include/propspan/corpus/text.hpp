#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "propspan/corpus/types.hpp"

namespace propspan::corpus {

/// Splits on Unicode whitespace, then splits every non-alphanumeric character
/// off as a token of its own. Offsets index `text` exactly.
std::vector<Token> tokenize(std::u32string_view text);

/// Sentence boundaries fall after `.`, `!` or `?` when the next character is
/// whitespace. Closing quotes and brackets directly after the terminator stay
/// with the sentence. Text without a terminator forms a single sentence.
std::vector<Sentence> split_sentences(const Article& article);

/// Tags each token 1 iff its character interval overlaps any span. Spans
/// crossing a sentence boundary tag every sentence they touch.
/// Throws RangeError for spans outside the article and ContractError for
/// spans of another article.
std::vector<Sentence> project_spans_to_tags(const Article& article,
                                            std::span<const Sentence> sentences,
                                            std::span<const SpanAnnotation> spans);

/// One span per maximal run of 1-tags, from the first token's begin to the last
/// token's end.
std::vector<SpanAnnotation> tags_to_spans(const Sentence& sentence, std::span<const int> tags);

/// Sorts spans and merges those that overlap, touch, or are separated only by
/// whitespace in the article text. Techniques are dropped.
std::vector<SpanAnnotation> merge_whitespace_adjacent(const Article& article,
                                                      std::vector<SpanAnnotation> spans);

/// tags_to_spans over every sentence of an article followed by the whitespace merge.
std::vector<SpanAnnotation> article_tags_to_spans(const Article& article,
                                                  std::span<const Sentence> sentences,
                                                  std::span<const TagSequence> tags);

}  // namespace propspan::corpus
