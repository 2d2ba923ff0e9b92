#include "propspan/cli/synthetic.hpp"

#include <random>

#include "propspan/corpus/io.hpp"
#include "propspan/corpus/utf8.hpp"
#include "propspan/error.hpp"

namespace propspan::cli {

namespace {

struct PhraseFamily {
  const char* technique;
  std::vector<const char*> phrases;
};

const std::vector<PhraseFamily>& families() {
  static const std::vector<PhraseFamily> f{
      {"Loaded_Language",
       {"a disgusting and shameful disaster", "a vile and shameful betrayal", "a disgusting and vile scheme"}},
      {"Doubt",
       {"nobody can really trust these claims", "nobody should really believe these numbers",
        "we cannot really trust these reports"}},
      {"Flag-Waving",
       {"our great nation must stand proud", "our proud nation must stand strong",
        "every true patriot must stand strong"}},
  };
  return f;
}

const std::vector<const char*> kPrefixes{"The mayor said that", "Officials claimed that", "Local reporters wrote that",
                                         "The spokesman added that", "Critics argued that"};
const std::vector<const char*> kSuffixes{"this week", "according to the report", "during the meeting", "on Monday"};
const std::vector<const char*> kNeutral{
    "The committee met on Tuesday to review the budget.",
    "Reporters asked about the schedule for the next meeting.",
    "The report was published on Monday by the committee.",
    "Officials said the meeting will continue next week.",
    "The budget review is scheduled for Tuesday.",
};

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticOptions& options) {
  const std::size_t total = options.articles * options.sentences_per_article;
  if (options.planted > total) {
    throw ContractError("make_synthetic: " + std::to_string(options.planted) + " planted sentences exceed " +
                        std::to_string(total));
  }
  std::mt19937_64 rng(options.seed);
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  // Partial Fisher-Yates: the first `planted` entries choose the planted sentences.
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  for (std::size_t i = 0; i < options.planted; ++i) std::swap(order[i], order[i + pick(total - i)]);
  std::vector<int> family_of(total, -1);
  for (std::size_t k = 0; k < options.planted; ++k) family_of[order[k]] = static_cast<int>(k % families().size());

  SyntheticCorpus out;
  std::vector<std::string> names;
  for (const auto& f : families()) names.emplace_back(f.technique);
  out.labels = corpus::LabelSet(names);

  for (std::size_t a = 0; a < options.articles; ++a) {
    corpus::Article article{std::to_string(1001 + a), {}};
    for (std::size_t s = 0; s < options.sentences_per_article; ++s) {
      if (s > 0) article.text += U' ';
      const int family = family_of[a * options.sentences_per_article + s];
      if (family < 0) {
        article.text += corpus::utf8::decode(kNeutral[pick(kNeutral.size())]);
        continue;
      }
      const auto& fam = families()[static_cast<std::size_t>(family)];
      article.text += corpus::utf8::decode(std::string(kPrefixes[pick(kPrefixes.size())]) + " ");
      const auto phrase = corpus::utf8::decode(fam.phrases[pick(fam.phrases.size())]);
      const std::size_t begin = article.text.size();
      article.text += phrase;
      out.spans.push_back({article.id, begin, begin + phrase.size(), std::string(fam.technique)});
      article.text += corpus::utf8::decode(std::string(" ") + kSuffixes[pick(kSuffixes.size())] + ".");
    }
    article.text += U'\n';
    out.articles.push_back(std::move(article));
  }
  return out;
}

void write_synthetic(const std::filesystem::path& directory, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(directory / "articles");
  for (const auto& article : corpus.articles) corpus::write_article(directory / "articles", article);
  corpus::write_span_labels(directory / "si-labels.tsv", corpus.spans, corpus::LabelMode::si);
  corpus::write_span_labels(directory / "tc-labels.tsv", corpus.spans, corpus::LabelMode::tc);
  corpus.labels.save(directory / "techniques.txt");
}

}  // namespace propspan::cli
