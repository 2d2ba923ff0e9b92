#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "propspan/corpus/types.hpp"

namespace propspan::corpus {

/// Ordered technique names; a technique's position is its class index.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  /// The 14 technique classes of the shared task, in the task's spelling.
  static LabelSet default_techniques();
  /// One name per line; blank lines ignored.
  static LabelSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_of(name).has_value(); }

  /// Throws FormatError naming the first row whose technique is missing or unknown.
  void validate(std::span<const SpanAnnotation> spans) const;

 private:
  std::vector<std::string> names_;
};

}  // namespace propspan::corpus
