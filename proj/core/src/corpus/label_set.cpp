#include "propspan/corpus/label_set.hpp"

#include <algorithm>
#include <sstream>

#include "propspan/corpus/io.hpp"
#include "propspan/error.hpp"

namespace propspan::corpus {

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw FormatError("empty technique name");
    if (std::find(names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(i), names_[i]) !=
        names_.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw FormatError("duplicate technique name '" + names_[i] + "'");
    }
  }
}

LabelSet LabelSet::default_techniques() {
  return LabelSet({
      "Appeal_to_Authority",
      "Appeal_to_fear-prejudice",
      "Bandwagon,Reductio_ad_hitlerum",
      "Black-and-White_Fallacy",
      "Causal_Oversimplification",
      "Doubt",
      "Exaggeration,Minimisation",
      "Flag-Waving",
      "Loaded_Language",
      "Name_Calling,Labeling",
      "Repetition",
      "Slogans",
      "Thought-terminating_Cliches",
      "Whataboutism,Straw_Men,Red_Herring",
  });
}

LabelSet LabelSet::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty()) throw FormatError("label-set file " + path.string() + " is empty");
  return LabelSet(std::move(names));
}

void LabelSet::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& name : names_) out += name + "\n";
  write_file(path, out);
}

std::optional<std::size_t> LabelSet::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

void LabelSet::validate(std::span<const SpanAnnotation> spans) const {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& technique = spans[i].technique;
    if (!technique || !contains(*technique)) {
      throw FormatError("row " + std::to_string(i + 1) + ": technique '" +
                        technique.value_or("") + "' is not in the label set");
    }
  }
}

}  // namespace propspan::corpus
