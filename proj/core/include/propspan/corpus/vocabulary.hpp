#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "propspan/corpus/types.hpp"

namespace propspan::corpus {

/// Bijective surface <-> id map. Ids 0..5 are reserved; corpus tokens start at
/// `kFirstRegular`. Corpus tokens spelled like a reserved surface are never
/// assigned an id and encode as unknown.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kSequenceStart = 2;
  static constexpr int kClassifier = 3;
  static constexpr int kMask = 4;
  static constexpr int kMarker = 5;
  static constexpr int kFirstRegular = 6;

  static constexpr std::array<std::string_view, kFirstRegular> kReservedSurfaces{
      "[PAD]", "[UNK]", "[BOS]", "[CLS]", "[MASK]", "^"};

  Vocabulary() = default;
  /// Regular surfaces in id order (id = kFirstRegular + index).
  explicit Vocabulary(std::vector<std::string> regular_surfaces);

  /// Keeps tokens seen at least `min_count` times, most frequent first, ties by surface.
  static Vocabulary build(std::span<const Sentence> sentences, std::size_t min_count = 2);

  std::size_t size() const { return kFirstRegular + regular_.size(); }
  int id_of(std::u32string_view surface) const;
  int id_of_utf8(const std::string& surface) const;
  std::string surface(int id) const;
  std::vector<int> encode(std::span<const Token> tokens) const;
  const std::vector<std::string>& regular_surfaces() const { return regular_; }

 private:
  std::vector<std::string> regular_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace propspan::corpus
