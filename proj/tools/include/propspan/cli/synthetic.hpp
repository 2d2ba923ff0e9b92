#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "propspan/corpus/label_set.hpp"
#include "propspan/corpus/types.hpp"

namespace propspan::cli {

struct SyntheticOptions {
  std::size_t articles = 10;
  std::size_t sentences_per_article = 5;
  /// Sentences that carry a planted trigger phrase; the rest are neutral.
  std::size_t planted = 40;
  std::uint64_t seed = 7;
};

/// Template sentences with planted trigger phrases, one technique class per
/// phrase family.
struct SyntheticCorpus {
  std::vector<corpus::Article> articles;
  std::vector<corpus::SpanAnnotation> spans;  // with techniques
  corpus::LabelSet labels;
};

SyntheticCorpus make_synthetic(const SyntheticOptions& options);

/// Writes articles/, si-labels.tsv, tc-labels.tsv and techniques.txt.
void write_synthetic(const std::filesystem::path& directory, const SyntheticCorpus& corpus);

}  // namespace propspan::cli
