#include "propspan/corpus/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "propspan/corpus/utf8.hpp"
#include "propspan/error.hpp"

namespace propspan::corpus {

namespace {

bool is_reserved(const std::string& surface) {
  return std::find(Vocabulary::kReservedSurfaces.begin(), Vocabulary::kReservedSurfaces.end(),
                   surface) != Vocabulary::kReservedSurfaces.end();
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> regular_surfaces)
    : regular_(std::move(regular_surfaces)) {
  for (std::size_t i = 0; i < regular_.size(); ++i) {
    if (regular_[i].empty() || is_reserved(regular_[i])) {
      throw FormatError("vocabulary entry '" + regular_[i] + "' is empty or reserved");
    }
    if (!ids_.emplace(regular_[i], kFirstRegular + static_cast<int>(i)).second) {
      throw FormatError("duplicate vocabulary entry '" + regular_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const Sentence> sentences, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence.tokens) ++counts[utf8::encode(token.surface)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [surface, count] : counts) {
    if (count >= min_count && !is_reserved(surface)) kept.emplace_back(surface, count);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> surfaces;
  surfaces.reserve(kept.size());
  for (auto& entry : kept) surfaces.push_back(std::move(entry.first));
  return Vocabulary(std::move(surfaces));
}

int Vocabulary::id_of_utf8(const std::string& surface) const {
  const auto it = ids_.find(surface);
  return it == ids_.end() ? kUnknown : it->second;
}

int Vocabulary::id_of(std::u32string_view surface) const { return id_of_utf8(utf8::encode(surface)); }

std::string Vocabulary::surface(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw ContractError("vocabulary id " + std::to_string(id) + " out of range");
  }
  if (id < kFirstRegular) return std::string(kReservedSurfaces[static_cast<std::size_t>(id)]);
  return regular_[static_cast<std::size_t>(id - kFirstRegular)];
}

std::vector<int> Vocabulary::encode(std::span<const Token> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(id_of(token.surface));
  return ids;
}

}  // namespace propspan::corpus
