#include "propspan/corpus/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "propspan/corpus/utf8.hpp"
#include "propspan/error.hpp"

namespace propspan::corpus {

namespace fs = std::filesystem;

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_leading_zeros(const std::string& s) {
  const auto pos = s.find_first_not_of('0');
  return pos == std::string::npos ? "0" : s.substr(pos);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

Offset parse_offset(const std::string& field, const std::string& source, std::size_t line_no) {
  Offset value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw FormatError(source + ": bad offset '" + field + "' at line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

bool article_id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    const auto na = strip_leading_zeros(a);
    const auto nb = strip_leading_zeros(b);
    if (na.size() != nb.size()) return na.size() < nb.size();
    if (na != nb) return na < nb;
  }
  return a < b;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("cannot write " + path.string());
}

std::vector<Article> load_articles(const fs::path& directory) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw IoError("not a directory: " + directory.string());

  std::vector<Article> articles;
  for (const auto& entry : fs::directory_iterator(directory)) {
    const auto name = entry.path().filename().string();
    constexpr std::string_view prefix = "article";
    constexpr std::string_view suffix = ".txt";
    if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) ||
        !name.ends_with(suffix)) {
      continue;
    }
    Article article;
    article.id = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    article.text = utf8::decode(read_file(entry.path()), entry.path().string());
    articles.push_back(std::move(article));
  }
  std::sort(articles.begin(), articles.end(),
            [](const Article& a, const Article& b) { return article_id_less(a.id, b.id); });
  for (std::size_t i = 1; i < articles.size(); ++i) {
    const auto& prev = articles[i - 1].id;
    const auto& cur = articles[i].id;
    const bool same = prev == cur || (all_digits(prev) && all_digits(cur) &&
                                      strip_leading_zeros(prev) == strip_leading_zeros(cur));
    if (same) throw FormatError("duplicate article id " + cur + " in " + directory.string());
  }
  return articles;
}

std::vector<SpanAnnotation> parse_span_labels(std::istream& in, LabelMode mode,
                                              const std::string& source) {
  const std::size_t columns = mode == LabelMode::si ? 3 : 4;
  std::vector<SpanAnnotation> spans;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != columns) {
      throw FormatError(source + ": expected " + std::to_string(columns) + " columns, got " +
                        std::to_string(fields.size()) + " at line " + std::to_string(line_no));
    }
    SpanAnnotation span;
    span.article_id = fields[0];
    if (span.article_id.empty()) {
      throw FormatError(source + ": empty article id at line " + std::to_string(line_no));
    }
    const std::size_t first_offset = mode == LabelMode::si ? 1 : 2;
    if (mode == LabelMode::tc) span.technique = fields[1];
    span.begin = parse_offset(fields[first_offset], source, line_no);
    span.end = parse_offset(fields[first_offset + 1], source, line_no);
    if (span.begin >= span.end) {
      throw FormatError("begin ≥ end at line " + std::to_string(line_no) + " of " + source);
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<SpanAnnotation> load_span_labels(const fs::path& path, LabelMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_span_labels(in, mode, path.string());
}

void write_span_labels(std::ostream& out, std::span<const SpanAnnotation> spans, LabelMode mode) {
  for (const auto& span : spans) {
    out << span.article_id << '\t';
    if (mode == LabelMode::tc) {
      if (!span.technique) {
        throw ContractError("TC row for article " + span.article_id + " has no technique");
      }
      out << *span.technique << '\t';
    }
    out << span.begin << '\t' << span.end << '\n';
  }
}

void write_span_labels(const fs::path& path, std::span<const SpanAnnotation> spans, LabelMode mode) {
  std::ostringstream out;
  write_span_labels(out, spans, mode);
  write_file(path, out.str());
}

void write_article(const fs::path& directory, const Article& article) {
  write_file(directory / ("article" + article.id + ".txt"), utf8::encode(article.text));
}

}  // namespace propspan::corpus
