#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "propspan/corpus/types.hpp"

namespace propspan::corpus {

/// Reads every `article<id>.txt` in `directory`. Ids are ordered numerically when
/// both are all-digit strings, otherwise lexicographically. Two files whose ids
/// denote the same number (`article7.txt`, `article07.txt`) are duplicates.
std::vector<Article> load_articles(const std::filesystem::path& directory);

/// Parses an SI (`id\tbegin\tend`) or TC (`id\ttechnique\tbegin\tend`) label file.
/// Blank lines are skipped; a trailing '\r' is ignored.
std::vector<SpanAnnotation> load_span_labels(const std::filesystem::path& path, LabelMode mode);
std::vector<SpanAnnotation> parse_span_labels(std::istream& in, LabelMode mode,
                                              const std::string& source = "<stream>");

void write_span_labels(std::ostream& out, std::span<const SpanAnnotation> spans, LabelMode mode);
void write_span_labels(const std::filesystem::path& path, std::span<const SpanAnnotation> spans,
                       LabelMode mode);

void write_article(const std::filesystem::path& directory, const Article& article);

/// Orders article ids the way load_articles does.
bool article_id_less(const std::string& a, const std::string& b);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace propspan::corpus
