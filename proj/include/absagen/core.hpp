#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace absagen {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownLabel : Error { using Error::Error; };
struct MalformedCorpus : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct UnknownCategory : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };
struct TrialNotSubset : Error { using Error::Error; };
struct EmptyTrain : Error { using Error::Error; };
struct NoClasses : Error { using Error::Error; };
struct IncompatibleMode : Error { using Error::Error; };
struct MissingTarget : Error { using Error::Error; };
struct UnexpectedTarget : Error { using Error::Error; };
struct SequenceTooLong : Error { using Error::Error; };
struct PromptTooLong : Error { using Error::Error; };
struct EmptyTrainingSet : Error { using Error::Error; };
struct MissingPrediction : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct TooFewSnapshots : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

enum class Domain { restaurant, laptop, movie, dialog };
enum class Source { semeval14, semeval16, sst2, sst5, oos };
enum class Split { train, dev, test };

enum class TaskMode {
  single_term,      // polarity of a given aspect term
  single_category,  // polarity of a given aspect category
  joint_term,       // generate all (term, polarity) pairs
  joint_category,   // generate all (category, polarity) pairs
  multi,            // term pairs then category pairs
  sentence_label,   // one label for the whole sentence/utterance
};

inline std::string to_string(Domain d) {
  switch (d) {
    case Domain::restaurant: return "restaurant";
    case Domain::laptop: return "laptop";
    case Domain::movie: return "movie";
    case Domain::dialog: return "dialog";
  }
  throw Error("bad Domain");
}

inline std::string to_string(Source s) {
  switch (s) {
    case Source::semeval14: return "semeval14";
    case Source::semeval16: return "semeval16";
    case Source::sst2: return "sst2";
    case Source::sst5: return "sst5";
    case Source::oos: return "oos";
  }
  throw Error("bad Source");
}

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  throw Error("bad Split");
}

inline std::string to_string(TaskMode m) {
  switch (m) {
    case TaskMode::single_term: return "single_term";
    case TaskMode::single_category: return "single_category";
    case TaskMode::joint_term: return "joint_term";
    case TaskMode::joint_category: return "joint_category";
    case TaskMode::multi: return "multi";
    case TaskMode::sentence_label: return "sentence_label";
  }
  throw Error("bad TaskMode");
}

inline Domain domain_from_string(std::string_view s) {
  if (s == "restaurant") return Domain::restaurant;
  if (s == "laptop") return Domain::laptop;
  if (s == "movie") return Domain::movie;
  if (s == "dialog") return Domain::dialog;
  throw FormatError("unknown domain: " + std::string(s));
}

inline Source source_from_string(std::string_view s) {
  if (s == "semeval14") return Source::semeval14;
  if (s == "semeval16") return Source::semeval16;
  if (s == "sst2") return Source::sst2;
  if (s == "sst5") return Source::sst5;
  if (s == "oos") return Source::oos;
  throw FormatError("unknown source: " + std::string(s));
}

inline TaskMode task_mode_from_string(std::string_view s) {
  if (s == "single_term") return TaskMode::single_term;
  if (s == "single_category") return TaskMode::single_category;
  if (s == "joint_term") return TaskMode::joint_term;
  if (s == "joint_category") return TaskMode::joint_category;
  if (s == "multi") return TaskMode::multi;
  if (s == "sentence_label") return TaskMode::sentence_label;
  throw FormatError("unknown task mode: " + std::string(s));
}

inline bool is_single_mode(TaskMode m) {
  return m == TaskMode::single_term || m == TaskMode::single_category;
}
inline bool is_term_mode(TaskMode m) {
  return m == TaskMode::single_term || m == TaskMode::joint_term;
}
inline bool is_category_mode(TaskMode m) {
  return m == TaskMode::single_category || m == TaskMode::joint_category;
}
// Modes whose output contains a term segment / a category segment.
inline bool mode_has_terms(TaskMode m) {
  return is_term_mode(m) || m == TaskMode::multi;
}
inline bool mode_has_categories(TaskMode m) {
  return is_category_mode(m) || m == TaskMode::multi;
}

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

// Lowercase, trim, collapse whitespace runs to single spaces. Idempotent.
inline std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polarity and pair types
// ---------------------------------------------------------------------------

struct Polarity {
  std::string label;
  auto operator<=>(const Polarity&) const = default;
};

// Closed label vocabulary for a task. Labels are stored normalized and may
// be multi-word ("somewhat positive").
struct PolaritySet {
  std::vector<std::string> labels;

  static PolaritySet absa() {
    return PolaritySet{{"positive", "negative", "neutral", "conflict"}};
  }

  bool contains(std::string_view label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
  }

  // Collect the distinct normalized labels of a label stream, first-seen order.
  template <typename It>
  static PolaritySet from_labels(It begin, It end) {
    PolaritySet set;
    for (It it = begin; it != end; ++it) {
      std::string norm = normalize_text(*it);
      if (!set.contains(norm)) set.labels.push_back(std::move(norm));
    }
    return set;
  }
};

inline Polarity polarity_parse(std::string_view s, const PolaritySet& labels) {
  if (labels.labels.empty()) throw UnknownLabel("empty polarity set");
  std::string norm = normalize_text(s);
  if (!labels.contains(norm))
    throw UnknownLabel("label not in polarity set: '" + norm + "'");
  return Polarity{std::move(norm)};
}

struct TermPair {
  std::string term;
  Polarity polarity;
  auto operator<=>(const TermPair&) const = default;
};

struct CategoryPair {
  std::string category;  // rendered form, e.g. "food quality"
  Polarity polarity;
  auto operator<=>(const CategoryPair&) const = default;
};

// ---------------------------------------------------------------------------
// Example / Dataset
// ---------------------------------------------------------------------------

struct Example {
  std::string id;
  std::string sentence;  // raw, as read from the corpus
  std::vector<TermPair> terms;
  std::vector<CategoryPair> categories;
  std::optional<Polarity> sentence_label;
  Domain domain = Domain::restaurant;
  Source source = Source::semeval14;

  bool operator==(const Example&) const = default;
};

// Ingestion-time invariants. Markers must never be forgeable from corpus
// text, so "<|" is rejected outright.
inline void validate_example(const Example& e) {
  if (normalize_text(e.sentence).empty())
    throw SchemaViolation("example '" + e.id + "': empty sentence");
  if (e.sentence_label && (!e.terms.empty() || !e.categories.empty()))
    throw SchemaViolation("example '" + e.id +
                          "': sentence_label is exclusive with pair annotations");
  auto reject_marker = [&](std::string_view text, const char* what) {
    if (text.find("<|") != std::string_view::npos)
      throw SchemaViolation("example '" + e.id + "': " + what +
                            " contains marker text '<|'");
  };
  reject_marker(e.sentence, "sentence");
  for (const auto& t : e.terms) {
    if (normalize_text(t.term).empty())
      throw SchemaViolation("example '" + e.id + "': empty aspect term");
    reject_marker(t.term, "term");
    reject_marker(t.polarity.label, "polarity");
  }
  for (const auto& c : e.categories) {
    reject_marker(c.category, "category");
    reject_marker(c.polarity.label, "polarity");
  }
  if (e.sentence_label) reject_marker(e.sentence_label->label, "label");
}

struct Dataset {
  std::string name;
  Split split = Split::train;
  std::vector<Example> examples;

  void check_unique_ids() const {
    std::vector<std::string_view> ids;
    ids.reserve(examples.size());
    for (const auto& e : examples) ids.push_back(e.id);
    std::sort(ids.begin(), ids.end());
    auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end())
      throw SchemaViolation("duplicate example id in " + name + ": " +
                            std::string(*dup));
  }
};

// Which task modes a corpus can train/evaluate. Multi needs both annotation
// kinds, which only the restaurant domain carries.
inline bool mode_supported(Source source, Domain domain, TaskMode mode) {
  const bool has_terms =
      source == Source::semeval14 ||
      (source == Source::semeval16 && domain == Domain::restaurant);
  const bool has_categories =
      (source == Source::semeval14 && domain == Domain::restaurant) ||
      source == Source::semeval16;
  const bool has_label =
      source == Source::sst2 || source == Source::sst5 || source == Source::oos;
  switch (mode) {
    case TaskMode::single_term:
    case TaskMode::joint_term:
      return has_terms;
    case TaskMode::single_category:
    case TaskMode::joint_category:
      return has_categories;
    case TaskMode::multi:
      return has_terms && has_categories && domain == Domain::restaurant;
    case TaskMode::sentence_label:
      return has_label;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Canonical JSONL interchange
// ---------------------------------------------------------------------------

inline json example_to_json(const Example& e) {
  json j;
  j["id"] = e.id;
  j["sentence"] = e.sentence;
  json terms = json::array();
  for (const auto& t : e.terms) terms.push_back({t.term, t.polarity.label});
  j["terms"] = std::move(terms);
  json cats = json::array();
  for (const auto& c : e.categories)
    cats.push_back({c.category, c.polarity.label});
  j["categories"] = std::move(cats);
  if (e.sentence_label)
    j["sentence_label"] = e.sentence_label->label;
  else
    j["sentence_label"] = nullptr;
  j["domain"] = to_string(e.domain);
  j["source"] = to_string(e.source);
  return j;
}

inline Example example_from_json(const json& j) {
  Example e;
  try {
    e.id = j.at("id").get<std::string>();
    e.sentence = j.at("sentence").get<std::string>();
    for (const auto& t : j.at("terms"))
      e.terms.push_back({t.at(0).get<std::string>(),
                         Polarity{t.at(1).get<std::string>()}});
    for (const auto& c : j.at("categories"))
      e.categories.push_back({c.at(0).get<std::string>(),
                              Polarity{c.at(1).get<std::string>()}});
    if (j.contains("sentence_label") && !j.at("sentence_label").is_null())
      e.sentence_label = Polarity{j.at("sentence_label").get<std::string>()};
    e.domain = domain_from_string(j.at("domain").get<std::string>());
    e.source = source_from_string(j.at("source").get<std::string>());
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad example record: ") + ex.what());
  }
  return e;
}

inline void write_jsonl(const Dataset& ds, std::ostream& os) {
  for (const auto& e : ds.examples) os << example_to_json(e).dump() << '\n';
}

inline void write_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for write: " + path);
  write_jsonl(ds, os);
}

inline Dataset read_jsonl(std::istream& is, std::string name = "",
                          Split split = Split::train) {
  Dataset ds;
  ds.name = std::move(name);
  ds.split = split;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw FormatError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    ds.examples.push_back(example_from_json(j));
  }
  return ds;
}

inline Dataset read_jsonl_file(const std::string& path,
                               Split split = Split::train) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open: " + path);
  return read_jsonl(is, path, split);
}

}  // namespace absagen
