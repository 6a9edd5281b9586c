#pragma once

#include <string>
#include <vector>

#include <absagen/core.hpp>
#include <absagen/fewshot.hpp>
#include <absagen/seqcodec.hpp>

namespace testutil {

using namespace absagen;

inline Example restaurant_example(std::string id, std::string sentence,
                                  std::vector<TermPair> terms = {},
                                  std::vector<CategoryPair> categories = {}) {
  Example e;
  e.id = std::move(id);
  e.sentence = std::move(sentence);
  e.terms = std::move(terms);
  e.categories = std::move(categories);
  e.domain = Domain::restaurant;
  e.source = Source::semeval14;
  return e;
}

inline Example labeled_example(std::string id, std::string sentence,
                               std::string label,
                               Source source = Source::sst2) {
  Example e;
  e.id = std::move(id);
  e.sentence = std::move(sentence);
  e.sentence_label = Polarity{normalize_text(label)};
  e.domain = source == Source::oos ? Domain::dialog : Domain::movie;
  e.source = source;
  return e;
}

// The worked review from the serialization tables.
inline Example sailing_example() {
  return restaurant_example(
      "sail-1",
      "Once we sailed, the top-notch food and live entertainment sold us on "
      "a unforgettable evening.",
      {{"food", Polarity{"positive"}},
       {"live entertainment", Polarity{"positive"}}});
}

// Deterministic fuzz corpus shared by unit and acceptance tests. Terms and
// categories are built from word pools disjoint from the label vocabulary,
// so round trips are unambiguous.
struct Fuzzer {
  SplitMix64 rng;
  PolaritySet labels;
  std::vector<std::string> words = {
      "food",    "service", "sangria", "laptop",  "battery", "menu",
      "dessert", "pizza",   "staff",   "ambience", "screen",  "keyboard",
      "wine",    "pasta",   "decor",   "price",    "fish",    "bread"};

  explicit Fuzzer(uint64_t seed,
                  PolaritySet label_set = PolaritySet{{"positive", "negative",
                                                       "neutral", "conflict",
                                                       "somewhat positive",
                                                       "very negative"}})
      : rng(SplitMix64::stream(seed, "fuzzer")), labels(std::move(label_set)) {}

  std::string word() { return words[rng.bounded(words.size())]; }

  std::string phrase(size_t max_words) {
    size_t n = 1 + rng.bounded(max_words);
    std::string out;
    for (size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += word();
    }
    return out;
  }

  Polarity label() {
    return Polarity{labels.labels[rng.bounded(labels.labels.size())]};
  }

  Example example(size_t index, TaskMode mode) {
    Example e;
    e.id = "fuzz-" + std::to_string(index);
    e.sentence = phrase(8) + " was ordered";
    e.domain = Domain::restaurant;
    e.source = Source::semeval14;
    if (mode == TaskMode::sentence_label) {
      e.sentence_label = label();
      e.source = Source::sst5;
      e.domain = Domain::movie;
      return e;
    }
    const size_t n_terms = mode_has_terms(mode) ? rng.bounded(4) : 0;
    const size_t n_cats = mode_has_categories(mode) ? rng.bounded(4) : 0;
    for (size_t i = 0; i < n_terms; ++i) e.terms.push_back({phrase(3), label()});
    for (size_t i = 0; i < n_cats; ++i)
      e.categories.push_back({phrase(2), label()});
    // Single-task prompts need at least one target.
    if (is_single_mode(mode)) {
      if (mode == TaskMode::single_term && e.terms.empty())
        e.terms.push_back({phrase(2), label()});
      if (mode == TaskMode::single_category && e.categories.empty())
        e.categories.push_back({phrase(2), label()});
    }
    return e;
  }
};

}  // namespace testutil
