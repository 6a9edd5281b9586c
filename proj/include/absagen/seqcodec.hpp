#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core.hpp"

namespace absagen {

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

// Segment markers. Plain text built from ordinary vocabulary tokens and
// punctuation; they are never registered as atomic tokens in any model
// vocabulary.
struct IdentifierSet {
  std::string review_open = "<|review|>";
  std::string review_close = "<|endofreview|>";
  std::string term_open = "<|term|>";
  std::string term_close = "<|endofterm|>";
  std::string category_open = "<|category|>";
  std::string category_close = "<|endofcategory|>";
  std::string sentiment_open = "<|sentiment|>";
  std::string sentiment_close = "<|endofsentiment|>";
  std::string user_open = "<|user|>";
  std::string user_close = "<|endofuser|>";
  std::string intent_open = "<|intent|>";
  std::string intent_close = "<|endofintent|>";
  std::string pair_separator = " , ";

  static const IdentifierSet& standard() {
    static const IdentifierSet ids{};
    return ids;
  }
};

// Review sentences are folded through normalize_text when rendered, so the
// model always sees lowercase single-spaced text. Recorded in run manifests.
inline constexpr bool kLowercaseAtEncode = true;

enum class SeqRole { train, prompt };

// The two pair-bearing segment families.
enum class PairSegment { term, category };

inline std::string to_string(SeqRole r) {
  return r == SeqRole::train ? "train" : "prompt";
}

inline SeqRole seq_role_from_string(std::string_view s) {
  if (s == "train") return SeqRole::train;
  if (s == "prompt") return SeqRole::prompt;
  throw FormatError("unknown sequence role: " + std::string(s));
}

struct TaskSequence {
  std::string text;
  std::string example_id;
  TaskMode mode = TaskMode::joint_term;
  SeqRole role = SeqRole::train;
  std::string stop_string;  // close marker expected at generation end
};

inline json sequence_to_json(const TaskSequence& s) {
  json j;
  j["example_id"] = s.example_id;
  j["mode"] = to_string(s.mode);
  j["role"] = to_string(s.role);
  j["text"] = s.text;
  j["stop_string"] = s.stop_string;
  return j;
}

inline TaskSequence sequence_from_json(const json& j) {
  TaskSequence s;
  try {
    s.example_id = j.at("example_id").get<std::string>();
    s.mode = task_mode_from_string(j.at("mode").get<std::string>());
    s.role = seq_role_from_string(j.at("role").get<std::string>());
    s.text = j.at("text").get<std::string>();
    s.stop_string = j.at("stop_string").get<std::string>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad sequence record: ") + ex.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Category rendering
// ---------------------------------------------------------------------------

// "FOOD#QUALITY" style categories become plain words: lowercase, with '#',
// '_' and '/' as spaces ("anecdotes/miscellaneous" -> "anecdotes
// miscellaneous"). The inverse map back to the official form is kept by
// corpus_io for reports.
inline std::string render_category(std::string_view entity,
                                   std::optional<std::string_view> attribute =
                                       std::nullopt) {
  if (entity.empty()) throw Error("render_category: empty entity");
  std::string s(entity);
  if (attribute && !attribute->empty()) {
    s.push_back(' ');
    s.append(*attribute);
  }
  for (char& c : s)
    if (c == '#' || c == '_' || c == '/') c = ' ';
  return normalize_text(s);
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace detail {

inline std::string render_piece(std::string_view raw, const char* what) {
  std::string s = normalize_text(raw);
  if (s.find("<|") != std::string::npos)
    throw SchemaViolation(std::string(what) + " contains marker text: '" + s +
                          "'");
  return s;
}

inline std::string wrap_segment(const std::string& open,
                                const std::string& body,
                                const std::string& close) {
  if (body.empty()) return open + " " + close;
  return open + " " + body + " " + close;
}

struct Markers {
  const std::string* open;
  const std::string* close;
};

// Sentence segment markers depend on the corpus: OOS utterances use
// user/intent, everything else review/sentiment.
inline Markers review_markers(const IdentifierSet& ids, Source source) {
  if (source == Source::oos) return {&ids.user_open, &ids.user_close};
  return {&ids.review_open, &ids.review_close};
}

inline Markers label_markers(const IdentifierSet& ids, Source source) {
  if (source == Source::oos) return {&ids.intent_open, &ids.intent_close};
  return {&ids.sentiment_open, &ids.sentiment_close};
}

inline std::string sentence_segment(const Example& e,
                                    const IdentifierSet& ids) {
  auto m = review_markers(ids, e.source);
  return wrap_segment(*m.open, render_piece(e.sentence, "sentence"), *m.close);
}

inline std::string term_body(const std::vector<TermPair>& pairs,
                             const IdentifierSet& ids) {
  std::string body;
  for (const auto& p : pairs) {
    if (!body.empty()) body += ids.pair_separator;
    body += render_piece(p.term, "term");
    body += ' ';
    body += render_piece(p.polarity.label, "polarity");
  }
  return body;
}

inline std::string category_body(const std::vector<CategoryPair>& pairs,
                                 const IdentifierSet& ids) {
  std::string body;
  for (const auto& p : pairs) {
    if (!body.empty()) body += ids.pair_separator;
    body += render_piece(p.category, "category");
    body += ' ';
    body += render_piece(p.polarity.label, "polarity");
  }
  return body;
}

inline void check_mode(const Example& e, TaskMode mode) {
  if ((mode == TaskMode::sentence_label) != e.sentence_label.has_value())
    throw IncompatibleMode("example '" + e.id + "' does not fit mode " +
                           to_string(mode));
  if (!mode_supported(e.source, e.domain, mode))
    throw IncompatibleMode("mode " + to_string(mode) + " unsupported for " +
                           to_string(e.source) + "/" + to_string(e.domain));
}

}  // namespace detail

inline const std::string& stop_string_for(TaskMode mode, Source source,
                                          const IdentifierSet& ids =
                                              IdentifierSet::standard()) {
  switch (mode) {
    case TaskMode::single_term:
    case TaskMode::joint_term:
      return ids.term_close;
    case TaskMode::single_category:
    case TaskMode::joint_category:
    case TaskMode::multi:
      return ids.category_close;
    case TaskMode::sentence_label:
      return *detail::label_markers(ids, source).close;
  }
  throw Error("bad TaskMode");
}

// Render an example into training sequences. split=false yields one sequence
// holding all pairs; split=true yields one sequence per pair (n pairs -> n
// sequences).
inline std::vector<TaskSequence> encode_training(
    const Example& e, TaskMode mode, bool split = false,
    const IdentifierSet& ids = IdentifierSet::standard()) {
  detail::check_mode(e, mode);
  const std::string sent = detail::sentence_segment(e, ids);
  const std::string& stop = stop_string_for(mode, e.source, ids);

  auto make = [&](std::string text) {
    return TaskSequence{std::move(text), e.id, mode, SeqRole::train, stop};
  };

  std::vector<TaskSequence> out;
  switch (mode) {
    case TaskMode::single_term:
    case TaskMode::joint_term: {
      if (!split) {
        out.push_back(make(sent + " " +
                           detail::wrap_segment(ids.term_open,
                                                detail::term_body(e.terms, ids),
                                                ids.term_close)));
      } else {
        for (const auto& p : e.terms)
          out.push_back(make(sent + " " +
                             detail::wrap_segment(
                                 ids.term_open, detail::term_body({p}, ids),
                                 ids.term_close)));
      }
      break;
    }
    case TaskMode::single_category:
    case TaskMode::joint_category: {
      if (!split) {
        out.push_back(
            make(sent + " " +
                 detail::wrap_segment(ids.category_open,
                                      detail::category_body(e.categories, ids),
                                      ids.category_close)));
      } else {
        for (const auto& p : e.categories)
          out.push_back(
              make(sent + " " +
                   detail::wrap_segment(ids.category_open,
                                        detail::category_body({p}, ids),
                                        ids.category_close)));
      }
      break;
    }
    case TaskMode::multi: {
      if (!split) {
        out.push_back(
            make(sent + " " +
                 detail::wrap_segment(ids.term_open,
                                      detail::term_body(e.terms, ids),
                                      ids.term_close) +
                 " " +
                 detail::wrap_segment(ids.category_open,
                                      detail::category_body(e.categories, ids),
                                      ids.category_close)));
      } else {
        for (const auto& p : e.terms)
          out.push_back(make(sent + " " +
                             detail::wrap_segment(
                                 ids.term_open, detail::term_body({p}, ids),
                                 ids.term_close)));
        for (const auto& p : e.categories)
          out.push_back(
              make(sent + " " +
                   detail::wrap_segment(ids.category_open,
                                        detail::category_body({p}, ids),
                                        ids.category_close)));
      }
      break;
    }
    case TaskMode::sentence_label: {
      auto m = detail::label_markers(ids, e.source);
      out.push_back(make(
          sent + " " +
          detail::wrap_segment(*m.open,
                               detail::render_piece(e.sentence_label->label,
                                                    "label"),
                               *m.close)));
      break;
    }
  }
  return out;
}

// Render the inference prompt. Single-task modes take the queried term or
// rendered category and end with it; joint/multi prompts end at the review
// close marker; sentence-label prompts end with the open label marker.
inline TaskSequence encode_prompt(const Example& e, TaskMode mode,
                                  std::optional<std::string> target =
                                      std::nullopt,
                                  const IdentifierSet& ids =
                                      IdentifierSet::standard()) {
  detail::check_mode(e, mode);
  if (is_single_mode(mode) && !target)
    throw MissingTarget("mode " + to_string(mode) + " requires a target");
  if (!is_single_mode(mode) && target)
    throw UnexpectedTarget("mode " + to_string(mode) + " forbids a target");

  std::string text = detail::sentence_segment(e, ids);
  switch (mode) {
    case TaskMode::single_term:
      text += " " + ids.term_open + " " + detail::render_piece(*target, "term");
      break;
    case TaskMode::single_category:
      text += " " + ids.category_open + " " +
              detail::render_piece(*target, "category");
      break;
    case TaskMode::joint_term:
    case TaskMode::joint_category:
    case TaskMode::multi:
      break;  // review sentence only
    case TaskMode::sentence_label:
      text += " " + *detail::label_markers(ids, e.source).open;
      break;
  }
  return TaskSequence{std::move(text), e.id, mode, SeqRole::prompt,
                      stop_string_for(mode, e.source, ids)};
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

// Parsed structured output for one example plus parse diagnostics. For
// single/sentence modes exactly one pair is emitted, carrying the queried
// target (empty for sentence tasks) and an empty label on parse failure.
struct PredictionRecord {
  std::string example_id;
  TaskMode mode = TaskMode::joint_term;
  std::vector<TermPair> terms;
  std::vector<CategoryPair> categories;
  std::vector<std::string> parse_failures;
  bool truncated = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// Longest label that equals the fragment or is a " "-preceded suffix of it.
inline std::optional<std::string> longest_label_suffix(
    std::string_view fragment, const PolaritySet& labels) {
  std::optional<std::string> best;
  for (const auto& label : labels.labels) {
    if (label.empty()) continue;
    bool match = false;
    if (fragment == label) {
      match = true;
    } else if (fragment.size() > label.size() &&
               fragment.substr(fragment.size() - label.size()) == label &&
               fragment[fragment.size() - label.size() - 1] == ' ') {
      match = true;
    }
    if (match && (!best || label.size() > best->size())) best = label;
  }
  return best;
}

// Earliest whole-word label occurrence; ties at the same start take the
// longest label.
inline std::optional<std::string> first_label_occurrence(
    std::string_view body, const PolaritySet& labels) {
  std::optional<std::string> best;
  size_t best_pos = std::string_view::npos;
  for (const auto& label : labels.labels) {
    if (label.empty()) continue;
    size_t pos = 0;
    while ((pos = body.find(label, pos)) != std::string_view::npos) {
      const bool left_ok = pos == 0 || body[pos - 1] == ' ';
      const size_t end = pos + label.size();
      const bool right_ok = end == body.size() || body[end] == ' ';
      if (left_ok && right_ok) break;
      ++pos;
    }
    if (pos == std::string_view::npos) continue;
    if (pos < best_pos || (pos == best_pos && label.size() > best->size())) {
      best_pos = pos;
      best = label;
    }
  }
  return best;
}

// Fragment boundaries of a segment body, split on commas. Accepts the
// canonical " , " separator as well as bare commas.
inline std::vector<std::pair<size_t, size_t>> fragment_ranges(
    std::string_view body) {
  std::vector<std::pair<size_t, size_t>> out;
  size_t start = 0;
  for (size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      std::string_view frag = body.substr(start, i - start);
      size_t lead = 0;
      while (lead < frag.size() &&
             std::isspace(static_cast<unsigned char>(frag[lead])))
        ++lead;
      std::string_view t = trim(frag);
      if (!t.empty()) out.emplace_back(start + lead, start + lead + t.size());
      start = i + 1;
    }
  }
  return out;
}

struct SegmentCut {
  std::string_view body;
  bool closed = false;
};

// Body of the earliest segment of the given family: text after the open
// marker (if present) up to the close marker (if present).
inline SegmentCut cut_segment(std::string_view text, const std::string& open,
                              const std::string& close) {
  SegmentCut cut;
  size_t begin = 0;
  size_t open_pos = text.find(open);
  if (open_pos != std::string_view::npos) begin = open_pos + open.size();
  size_t close_pos = text.find(close, begin);
  if (close_pos != std::string_view::npos) {
    cut.body = text.substr(begin, close_pos - begin);
    cut.closed = true;
  } else {
    cut.body = text.substr(begin);
  }
  cut.body = trim(cut.body);
  return cut;
}

inline void parse_fragments(std::string_view body, const PolaritySet& labels,
                            bool as_categories, PredictionRecord& rec) {
  for (auto [b, e] : fragment_ranges(body)) {
    std::string frag = normalize_text(body.substr(b, e - b));
    auto label = longest_label_suffix(frag, labels);
    if (!label) {
      rec.parse_failures.push_back(frag);
      continue;
    }
    std::string head =
        frag.size() == label->size()
            ? std::string()
            : std::string(trim(std::string_view(frag).substr(
                  0, frag.size() - label->size())));
    if (as_categories)
      rec.categories.push_back({std::move(head), Polarity{*label}});
    else
      rec.terms.push_back({std::move(head), Polarity{*label}});
  }
}

}  // namespace detail

// Parse generated continuation text (prompt excluded) back into structured
// pairs. Malformed fragments are recorded on the record, never dropped
// silently, and never fatal.
inline PredictionRecord decode_pairs(std::string_view generated, TaskMode mode,
                                     const PolaritySet& labels,
                                     std::optional<std::string> target =
                                         std::nullopt,
                                     const IdentifierSet& ids =
                                         IdentifierSet::standard()) {
  PredictionRecord rec;
  rec.mode = mode;

  switch (mode) {
    case TaskMode::single_term:
    case TaskMode::single_category:
    case TaskMode::sentence_label: {
      const std::string& open = mode == TaskMode::single_term
                                    ? ids.term_open
                                    : mode == TaskMode::single_category
                                          ? ids.category_open
                                          : ids.sentiment_open;
      const std::string& close = mode == TaskMode::single_term
                                     ? ids.term_close
                                     : mode == TaskMode::single_category
                                           ? ids.category_close
                                           : ids.sentiment_close;
      auto cut = detail::cut_segment(generated, open, close);
      // Sentence tasks over dialog corpora use the intent marker family.
      if (mode == TaskMode::sentence_label && !cut.closed) {
        auto alt = detail::cut_segment(generated, ids.intent_open,
                                       ids.intent_close);
        if (alt.closed) cut = alt;
      }
      rec.truncated = !cut.closed;
      std::string body = normalize_text(cut.body);
      auto label = detail::first_label_occurrence(body, labels);
      std::string term = target ? normalize_text(*target) : std::string();
      if (label) {
        if (mode == TaskMode::single_category)
          rec.categories.push_back({std::move(term), Polarity{*label}});
        else
          rec.terms.push_back({std::move(term), Polarity{*label}});
      } else {
        if (!body.empty()) rec.parse_failures.push_back(body);
        if (mode == TaskMode::single_category)
          rec.categories.push_back({std::move(term), Polarity{}});
        else
          rec.terms.push_back({std::move(term), Polarity{}});
      }
      break;
    }
    case TaskMode::joint_term: {
      auto cut = detail::cut_segment(generated, ids.term_open, ids.term_close);
      rec.truncated = !cut.closed;
      detail::parse_fragments(cut.body, labels, false, rec);
      break;
    }
    case TaskMode::joint_category: {
      auto cut = detail::cut_segment(generated, ids.category_open,
                                     ids.category_close);
      rec.truncated = !cut.closed;
      detail::parse_fragments(cut.body, labels, true, rec);
      break;
    }
    case TaskMode::multi: {
      // Term segment first, then the category segment.
      std::string_view text = generated;
      size_t term_end = text.find(ids.term_close);
      size_t cat_open = text.find(ids.category_open);
      std::string_view term_region;
      std::string_view cat_region;
      if (term_end != std::string_view::npos) {
        term_region = text.substr(0, term_end);
        cat_region = text.substr(term_end + ids.term_close.size());
      } else if (cat_open != std::string_view::npos) {
        term_region = text.substr(0, cat_open);
        cat_region = text.substr(cat_open);
      } else {
        term_region = text;
      }
      auto tcut =
          detail::cut_segment(term_region, ids.term_open, ids.term_close);
      detail::parse_fragments(tcut.body, labels, false, rec);
      auto ccut = detail::cut_segment(cat_region, ids.category_open,
                                      ids.category_close);
      detail::parse_fragments(ccut.body, labels, true, rec);
      rec.truncated = !ccut.closed;
      break;
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Label positions (for the label-position loss probe)
// ---------------------------------------------------------------------------

// Byte ranges of the polarity labels inside a rendered training sequence.
// Works on the sequence text alone, so the CLI train path can recover the
// positions from bare JSONL.
inline std::vector<std::pair<size_t, size_t>> label_spans_from_text(
    std::string_view text, const PolaritySet& labels,
    const IdentifierSet& ids = IdentifierSet::standard()) {
  std::vector<std::pair<size_t, size_t>> spans;
  const std::pair<const std::string*, const std::string*> families[] = {
      {&ids.term_open, &ids.term_close},
      {&ids.category_open, &ids.category_close},
      {&ids.sentiment_open, &ids.sentiment_close},
      {&ids.intent_open, &ids.intent_close},
  };
  for (auto [open, close] : families) {
    size_t open_pos = text.find(*open);
    if (open_pos == std::string_view::npos) continue;
    size_t body_begin = open_pos + open->size();
    size_t close_pos = text.find(*close, body_begin);
    size_t body_end =
        close_pos == std::string_view::npos ? text.size() : close_pos;
    std::string_view body = text.substr(body_begin, body_end - body_begin);
    for (auto [b, e] : detail::fragment_ranges(body)) {
      std::string_view frag = body.substr(b, e - b);
      auto label = detail::longest_label_suffix(frag, labels);
      if (!label) continue;
      size_t begin = body_begin + e - label->size();
      spans.emplace_back(begin, begin + label->size());
    }
  }
  std::sort(spans.begin(), spans.end());
  return spans;
}

// ---------------------------------------------------------------------------
// Prediction JSONL
// ---------------------------------------------------------------------------

inline json prediction_to_json(const PredictionRecord& r) {
  json j;
  j["example_id"] = r.example_id;
  json pairs = json::array();
  const bool primary_is_category =
      r.mode == TaskMode::single_category || r.mode == TaskMode::joint_category;
  if (primary_is_category) {
    for (const auto& p : r.categories)
      pairs.push_back({p.category, p.polarity.label});
  } else {
    for (const auto& p : r.terms) pairs.push_back({p.term, p.polarity.label});
  }
  j["pairs"] = std::move(pairs);
  if (r.mode == TaskMode::multi) {
    json cats = json::array();
    for (const auto& p : r.categories)
      cats.push_back({p.category, p.polarity.label});
    j["category_pairs"] = std::move(cats);
  }
  j["parse_failures"] = r.parse_failures;
  j["truncated"] = r.truncated;
  return j;
}

inline PredictionRecord prediction_from_json(const json& j, TaskMode mode) {
  PredictionRecord r;
  r.mode = mode;
  try {
    r.example_id = j.at("example_id").get<std::string>();
    const bool primary_is_category =
        mode == TaskMode::single_category || mode == TaskMode::joint_category;
    for (const auto& p : j.at("pairs")) {
      TermPair tp{p.at(0).get<std::string>(),
                  Polarity{p.at(1).get<std::string>()}};
      if (primary_is_category)
        r.categories.push_back({tp.term, tp.polarity});
      else
        r.terms.push_back(tp);
    }
    if (mode == TaskMode::multi && j.contains("category_pairs"))
      for (const auto& p : j.at("category_pairs"))
        r.categories.push_back({p.at(0).get<std::string>(),
                                Polarity{p.at(1).get<std::string>()}});
    if (j.contains("parse_failures"))
      r.parse_failures = j.at("parse_failures").get<std::vector<std::string>>();
    if (j.contains("truncated")) r.truncated = j.at("truncated").get<bool>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad prediction record: ") + ex.what());
  }
  return r;
}

}  // namespace absagen
