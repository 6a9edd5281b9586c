#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "core.hpp"
#include "seqcodec.hpp"

namespace absagen {

// ---------------------------------------------------------------------------
// Corpus specification
// ---------------------------------------------------------------------------

struct CorpusSpec {
  Source source = Source::semeval14;
  Domain domain = Domain::restaurant;
  std::map<Split, std::string> paths;  // at least train and test
  std::optional<std::string> trial_path;

  void validate() const {
    if (!paths.count(Split::train) || !paths.count(Split::test))
      throw Error("CorpusSpec needs at least train and test paths");
  }
};

struct LoadResult {
  std::map<Split, Dataset> splits;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Category inventories (rendered forms)
// ---------------------------------------------------------------------------

struct CategoryInventory {
  std::vector<std::string> entities;
  std::vector<std::string> attributes;  // empty for SemEval14

  bool allows(const std::string& entity,
              const std::optional<std::string>& attribute) const {
    auto has = [](const std::vector<std::string>& v, const std::string& s) {
      return std::find(v.begin(), v.end(), s) != v.end();
    };
    if (!has(entities, entity)) return false;
    if (attribute) return has(attributes, *attribute);
    return attributes.empty();
  }
};

inline const CategoryInventory& category_inventory(Source source,
                                                   Domain domain) {
  static const CategoryInventory sem14_restaurant{
      {"ambience", "anecdotes miscellaneous", "food", "price", "service"}, {}};
  static const CategoryInventory sem16_restaurant{
      {"ambience", "drinks", "food", "location", "restaurant", "service"},
      {"general", "prices", "quality", "style options", "miscellaneous"}};
  static const CategoryInventory sem16_laptop{
      {"battery",     "company",  "cpu",
       "display",     "fans cooling", "graphics",
       "hard disc",   "hardware", "keyboard",
       "laptop",      "memory",   "motherboard",
       "mouse",       "multimedia devices", "optical drives",
       "os",          "ports",    "power supply",
       "shipping",    "software", "support",
       "warranty"},
      {"connectivity", "design features", "general", "miscellaneous",
       "operation performance", "portability", "price", "quality",
       "usability"}};
  static const CategoryInventory none{{}, {}};

  if (source == Source::semeval14 && domain == Domain::restaurant)
    return sem14_restaurant;
  if (source == Source::semeval16 && domain == Domain::restaurant)
    return sem16_restaurant;
  if (source == Source::semeval16 && domain == Domain::laptop)
    return sem16_laptop;
  return none;
}

// Inverse of render_category for reports: "food quality" -> "FOOD#QUALITY".
// The entity is the longest inventory entity that prefixes the rendered
// string; whatever remains is the attribute.
inline std::string category_to_official(const std::string& rendered,
                                        Source source, Domain domain) {
  const auto& inv = category_inventory(source, domain);
  auto to_official_word = [](std::string s) {
    for (char& c : s) {
      if (c == ' ') c = '_';
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
  };

  std::string norm = normalize_text(rendered);
  const std::string* best_entity = nullptr;
  for (const auto& e : inv.entities) {
    if (norm == e || (norm.size() > e.size() && norm.compare(0, e.size(), e) == 0 &&
                      norm[e.size()] == ' ')) {
      if (!best_entity || e.size() > best_entity->size()) best_entity = &e;
    }
  }
  if (!best_entity) {
    // SemEval14 conserves '/' in its official category form.
    if (norm == "anecdotes miscellaneous") return "anecdotes/miscellaneous";
    return norm;  // unknown; pass through rendered form
  }
  if (norm.size() == best_entity->size()) {
    if (source == Source::semeval14) return *best_entity == "anecdotes miscellaneous"
                                                ? "anecdotes/miscellaneous"
                                                : *best_entity;
    return to_official_word(*best_entity);
  }
  std::string attribute = norm.substr(best_entity->size() + 1);
  return to_official_word(*best_entity) + "#" + to_official_word(attribute);
}

// ---------------------------------------------------------------------------
// XML helpers
// ---------------------------------------------------------------------------

namespace detail {

using ptree = boost::property_tree::ptree;

inline ptree parse_xml_file(const std::string& path) {
  ptree tree;
  try {
    boost::property_tree::read_xml(path, tree);
  } catch (const boost::property_tree::xml_parser_error& ex) {
    throw MalformedCorpus("cannot parse XML '" + path + "': " + ex.what());
  }
  return tree;
}

inline std::string require_attr(const ptree& node, const char* name,
                                const std::string& context) {
  auto value = node.get_optional<std::string>(std::string("<xmlattr>.") + name);
  if (!value)
    throw SchemaViolation("missing attribute '" + std::string(name) + "' in " +
                          context);
  return *value;
}

inline void check_offsets(const Example& e, const std::string& term,
                          const std::string& from, const std::string& to,
                          std::vector<std::string>& warnings) {
  try {
    const size_t begin = std::stoul(from);
    const size_t end = std::stoul(to);
    if (begin == 0 && end == 0) return;  // NULL-target convention
    if (end < begin || end > e.sentence.size() ||
        e.sentence.substr(begin, end - begin) != term)
      warnings.push_back("example '" + e.id + "': term '" + term +
                         "' not found at offsets " + from + ".." + to);
  } catch (const std::exception&) {
    warnings.push_back("example '" + e.id + "': unparseable offsets '" + from +
                       "'..'" + to + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SemEval14
// ---------------------------------------------------------------------------

inline Dataset parse_semeval14_xml(const std::string& path, Split split,
                                   Domain domain,
                                   std::vector<std::string>& warnings) {
  const auto tree = detail::parse_xml_file(path);
  auto sentences = tree.get_child_optional("sentences");
  if (!sentences) throw SchemaViolation("no <sentences> root in " + path);

  const PolaritySet absa = PolaritySet::absa();
  const auto& inventory = category_inventory(Source::semeval14, domain);

  Dataset ds;
  ds.name = path;
  ds.split = split;
  for (const auto& [tag, node] : *sentences) {
    if (tag != "sentence") continue;
    Example e;
    e.source = Source::semeval14;
    e.domain = domain;
    e.id = detail::require_attr(node, "id", "<sentence> of " + path);
    auto text = node.get_optional<std::string>("text");
    if (!text) throw SchemaViolation("sentence '" + e.id + "' has no <text>");
    e.sentence = *text;

    if (auto terms = node.get_child_optional("aspectTerms")) {
      for (const auto& [ttag, tnode] : *terms) {
        if (ttag != "aspectTerm") continue;
        const std::string context = "aspectTerm of sentence '" + e.id + "'";
        std::string term = detail::require_attr(tnode, "term", context);
        std::string polarity = detail::require_attr(tnode, "polarity", context);
        detail::check_offsets(e, term,
                              detail::require_attr(tnode, "from", context),
                              detail::require_attr(tnode, "to", context),
                              warnings);
        e.terms.push_back({term, polarity_parse(polarity, absa)});
      }
    }
    if (auto cats = node.get_child_optional("aspectCategories")) {
      for (const auto& [ctag, cnode] : *cats) {
        if (ctag != "aspectCategory") continue;
        const std::string context = "aspectCategory of sentence '" + e.id + "'";
        std::string category = detail::require_attr(cnode, "category", context);
        std::string polarity = detail::require_attr(cnode, "polarity", context);
        std::string rendered = render_category(category);
        if (!inventory.entities.empty() &&
            !inventory.allows(rendered, std::nullopt))
          throw UnknownCategory("category '" + category + "' (" + rendered +
                                ") outside the " + to_string(domain) +
                                " inventory");
        e.categories.push_back({rendered, polarity_parse(polarity, absa)});
      }
    }
    validate_example(e);
    ds.examples.push_back(std::move(e));
  }
  ds.check_unique_ids();
  return ds;
}

inline LoadResult load_semeval14(const CorpusSpec& spec) {
  spec.validate();
  LoadResult result;
  for (const auto& [split, path] : spec.paths)
    result.splits[split] =
        parse_semeval14_xml(path, split, spec.domain, result.warnings);
  return result;
}

// ---------------------------------------------------------------------------
// SemEval16
// ---------------------------------------------------------------------------

inline Dataset parse_semeval16_xml(const std::string& path, Split split,
                                   Domain domain,
                                   std::vector<std::string>& warnings) {
  const auto tree = detail::parse_xml_file(path);
  auto reviews = tree.get_child_optional("Reviews");
  if (!reviews) throw SchemaViolation("no <Reviews> root in " + path);

  const PolaritySet absa = PolaritySet::absa();
  const auto& inventory = category_inventory(Source::semeval16, domain);

  Dataset ds;
  ds.name = path;
  ds.split = split;
  for (const auto& [rtag, review] : *reviews) {
    if (rtag != "Review") continue;
    auto sentences = review.get_child_optional("sentences");
    if (!sentences) continue;
    for (const auto& [stag, node] : *sentences) {
      if (stag != "sentence") continue;
      Example e;
      e.source = Source::semeval16;
      e.domain = domain;
      e.id = detail::require_attr(node, "id", "<sentence> of " + path);
      auto text = node.get_optional<std::string>("text");
      if (!text) throw SchemaViolation("sentence '" + e.id + "' has no <text>");
      e.sentence = *text;

      if (auto opinions = node.get_child_optional("Opinions")) {
        for (const auto& [otag, onode] : *opinions) {
          if (otag != "Opinion") continue;
          const std::string context = "Opinion of sentence '" + e.id + "'";
          std::string category =
              detail::require_attr(onode, "category", context);
          std::string polarity =
              detail::require_attr(onode, "polarity", context);

          const size_t hash = category.find('#');
          std::string entity =
              hash == std::string::npos ? category : category.substr(0, hash);
          std::optional<std::string> attribute;
          if (hash != std::string::npos)
            attribute = category.substr(hash + 1);
          const std::string entity_rendered = render_category(entity);
          std::optional<std::string> attr_rendered;
          if (attribute) attr_rendered = render_category(*attribute);
          if (!inventory.allows(entity_rendered, attr_rendered))
            throw UnknownCategory("category '" + category + "' outside the " +
                                  to_string(domain) + " inventory");
          std::string rendered =
              attr_rendered ? entity_rendered + " " + *attr_rendered
                            : entity_rendered;
          e.categories.push_back({rendered, polarity_parse(polarity, absa)});

          // Opinion targets ("NULL" or absent yields no term pair; laptop
          // files carry no target slot at all).
          auto target = onode.get_optional<std::string>("<xmlattr>.target");
          if (target && *target != "NULL") {
            auto from = onode.get_optional<std::string>("<xmlattr>.from");
            auto to = onode.get_optional<std::string>("<xmlattr>.to");
            if (from && to)
              detail::check_offsets(e, *target, *from, *to, warnings);
            e.terms.push_back({*target, polarity_parse(polarity, absa)});
          }
        }
      }
      validate_example(e);
      ds.examples.push_back(std::move(e));
    }
  }
  ds.check_unique_ids();
  return ds;
}

inline LoadResult load_semeval16(const CorpusSpec& spec) {
  spec.validate();
  LoadResult result;
  for (const auto& [split, path] : spec.paths)
    result.splits[split] =
        parse_semeval16_xml(path, split, spec.domain, result.warnings);
  return result;
}

// ---------------------------------------------------------------------------
// SST / OOS
// ---------------------------------------------------------------------------

namespace detail {

// Numeric class ids in SST dumps become readable labels; textual labels
// pass through untouched.
inline std::string sst_label(const std::string& raw, Source source) {
  static const std::map<std::string, std::string> sst5{
      {"0", "very negative"},
      {"1", "somewhat negative"},
      {"2", "neutral"},
      {"3", "somewhat positive"},
      {"4", "very positive"}};
  static const std::map<std::string, std::string> sst2{{"0", "negative"},
                                                       {"1", "positive"}};
  if (source == Source::sst5) {
    if (auto it = sst5.find(raw); it != sst5.end()) return it->second;
  } else if (source == Source::sst2) {
    if (auto it = sst2.find(raw); it != sst2.end()) return it->second;
  }
  return raw;
}

inline Dataset parse_labeled_tsv(const std::string& path, Split split,
                                 Source source, Domain domain) {
  std::ifstream is(path);
  if (!is) throw MalformedCorpus("cannot open: " + path);
  Dataset ds;
  ds.name = path;
  ds.split = split;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw MalformedCorpus(path + ":" + std::to_string(lineno) +
                            ": expected 'label<TAB>sentence'");
    Example e;
    e.id = to_string(split) + "-" + std::to_string(lineno);
    e.sentence = line.substr(tab + 1);
    e.sentence_label =
        Polarity{normalize_text(sst_label(line.substr(0, tab), source))};
    e.domain = domain;
    e.source = source;
    validate_example(e);
    ds.examples.push_back(std::move(e));
  }
  if (ds.examples.empty()) throw EmptySplit("no records in " + path);
  return ds;
}

inline Dataset parse_oos_json(const std::string& path, Split split) {
  std::ifstream is(path);
  if (!is) throw MalformedCorpus("cannot open: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& ex) {
    throw MalformedCorpus(path + ": " + ex.what());
  }

  // The official release keys splits train/val/test with oos_* companions;
  // each companion merges into its split so out-of-scope is an ordinary
  // class at scoring time.
  std::vector<std::string> keys;
  switch (split) {
    case Split::train: keys = {"train", "oos_train"}; break;
    case Split::dev: keys = {"val", "oos_val"}; break;
    case Split::test: keys = {"test", "oos_test"}; break;
  }

  Dataset ds;
  ds.name = path;
  ds.split = split;
  size_t n = 0;
  for (const auto& key : keys) {
    if (!j.contains(key)) continue;
    for (const auto& item : j[key]) {
      if (!item.is_array() || item.size() != 2)
        throw MalformedCorpus(path + ": '" + key +
                              "' items must be [utterance, intent]");
      Example e;
      e.id = to_string(split) + "-" + std::to_string(n++);
      e.sentence = item[0].get<std::string>();
      e.sentence_label = Polarity{normalize_text(item[1].get<std::string>())};
      e.domain = Domain::dialog;
      e.source = Source::oos;
      validate_example(e);
      ds.examples.push_back(std::move(e));
    }
  }
  if (ds.examples.empty())
    throw EmptySplit("no records for split " + to_string(split) + " in " + path);
  return ds;
}

}  // namespace detail

inline LoadResult load_labeled_text(const CorpusSpec& spec) {
  spec.validate();
  LoadResult result;
  for (const auto& [split, path] : spec.paths) {
    if (spec.source == Source::oos)
      result.splits[split] = detail::parse_oos_json(path, split);
    else
      result.splits[split] =
          detail::parse_labeled_tsv(path, split, spec.source, spec.domain);
  }
  return result;
}

inline LoadResult load_corpus(const CorpusSpec& spec) {
  switch (spec.source) {
    case Source::semeval14: return load_semeval14(spec);
    case Source::semeval16: return load_semeval16(spec);
    case Source::sst2:
    case Source::sst5:
    case Source::oos: return load_labeled_text(spec);
  }
  throw Error("bad Source");
}

// ---------------------------------------------------------------------------
// Trial split
// ---------------------------------------------------------------------------

// Carve the official trial set out of train: dev gets the matched train
// examples, train' the rest. Matching is by id first, else by exact
// sentence, else by normalized sentence; duplicate sentences resolve to the
// first unmatched occurrence in file order.
inline std::pair<Dataset, Dataset> split_out_trial(const Dataset& train,
                                                   const Dataset& trial) {
  std::vector<bool> claimed(train.examples.size(), false);
  std::vector<size_t> dev_indices;
  std::vector<std::string> unmatched;

  auto find_match = [&](const Example& t) -> std::optional<size_t> {
    for (size_t i = 0; i < train.examples.size(); ++i)
      if (!claimed[i] && train.examples[i].id == t.id) return i;
    for (size_t i = 0; i < train.examples.size(); ++i)
      if (!claimed[i] && train.examples[i].sentence == t.sentence) return i;
    const std::string norm = normalize_text(t.sentence);
    for (size_t i = 0; i < train.examples.size(); ++i)
      if (!claimed[i] && normalize_text(train.examples[i].sentence) == norm)
        return i;
    return std::nullopt;
  };

  for (const auto& t : trial.examples) {
    if (auto i = find_match(t)) {
      claimed[*i] = true;
      dev_indices.push_back(*i);
    } else {
      unmatched.push_back(t.id);
    }
  }
  if (!unmatched.empty()) {
    std::string msg = "trial examples not found in train:";
    for (const auto& id : unmatched) msg += " '" + id + "'";
    throw TrialNotSubset(msg);
  }

  Dataset rest;
  rest.name = train.name;
  rest.split = Split::train;
  Dataset dev;
  dev.name = train.name;
  dev.split = Split::dev;
  for (size_t i : dev_indices) dev.examples.push_back(train.examples[i]);
  for (size_t i = 0; i < train.examples.size(); ++i)
    if (!claimed[i]) rest.examples.push_back(train.examples[i]);
  return {std::move(rest), std::move(dev)};
}

}  // namespace absagen
