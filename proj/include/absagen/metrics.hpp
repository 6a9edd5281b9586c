#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "seqcodec.hpp"

namespace absagen {

enum class PairSegment { term, category };

namespace detail {

using StrPair = std::pair<std::string, std::string>;

inline std::vector<StrPair> gold_pairs(const Example& e, PairSegment seg) {
  std::vector<StrPair> out;
  if (seg == PairSegment::term) {
    for (const auto& t : e.terms)
      out.emplace_back(normalize_text(t.term), normalize_text(t.polarity.label));
  } else {
    for (const auto& c : e.categories)
      out.emplace_back(normalize_text(c.category),
                       normalize_text(c.polarity.label));
  }
  return out;
}

inline std::vector<StrPair> pred_pairs(const PredictionRecord& r,
                                       PairSegment seg) {
  std::vector<StrPair> out;
  if (seg == PairSegment::term) {
    for (const auto& t : r.terms)
      out.emplace_back(normalize_text(t.term), normalize_text(t.polarity.label));
  } else {
    for (const auto& c : r.categories)
      out.emplace_back(normalize_text(c.category),
                       normalize_text(c.polarity.label));
  }
  return out;
}

inline PairSegment primary_segment(TaskMode mode) {
  return (mode == TaskMode::single_category || mode == TaskMode::joint_category)
             ? PairSegment::category
             : PairSegment::term;
}

// Multiset intersection size of two sorted pair lists.
inline size_t multiset_overlap(std::vector<StrPair> a, std::vector<StrPair> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<StrPair> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(inter));
  return inter.size();
}

inline bool multiset_equal(std::vector<StrPair> a, std::vector<StrPair> b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Polarity accuracy (single-task SB2/SB4, SST, OOS full accuracy)
// ---------------------------------------------------------------------------

// Fraction of gold targets whose predicted label matches after
// normalization. Requires one prediction per (example, queried target);
// an unanswered gold target is a hard error, never a silent zero. Parse
// failures (empty labels) count as wrong. Conflict is scored like any label.
inline double polarity_accuracy(const std::vector<PredictionRecord>& preds,
                                const Dataset& gold, TaskMode mode) {
  const PairSegment seg = detail::primary_segment(mode);

  struct Slot {
    std::string target;
    std::string label;
    bool used = false;
  };
  std::map<std::string, std::vector<Slot>> pool;
  for (const auto& r : preds)
    for (auto& [t, l] : detail::pred_pairs(r, seg))
      pool[r.example_id].push_back({t, l, false});

  size_t total = 0;
  size_t correct = 0;
  for (const auto& e : gold.examples) {
    auto it = pool.find(e.id);
    auto take = [&](const std::string& target) -> Slot* {
      if (it == pool.end()) return nullptr;
      for (auto& s : it->second) {
        if (s.used) continue;
        if (mode == TaskMode::sentence_label || s.target == target) {
          s.used = true;
          return &s;
        }
      }
      return nullptr;
    };

    if (mode == TaskMode::sentence_label) {
      if (!e.sentence_label)
        throw IncompatibleMode("gold example '" + e.id + "' has no label");
      ++total;
      Slot* s = take("");
      if (!s)
        throw MissingPrediction("no prediction for example '" + e.id + "'");
      if (s->label == normalize_text(e.sentence_label->label)) ++correct;
      continue;
    }

    for (auto& [target, label] : detail::gold_pairs(e, seg)) {
      ++total;
      Slot* s = take(target);
      if (!s)
        throw MissingPrediction("no prediction for example '" + e.id +
                                "' target '" + target + "'");
      if (s->label == label) ++correct;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / total;
}

// Per-target polarity accuracy under joint/multi generation: a gold target
// whose term/category was never generated counts as wrong (no hard error,
// since the model was not given the target).
inline double pair_polarity_accuracy(const std::vector<PredictionRecord>& preds,
                                     const Dataset& gold, PairSegment seg) {
  std::map<std::string, std::vector<detail::StrPair>> by_id;
  for (const auto& r : preds) {
    auto pairs = detail::pred_pairs(r, seg);
    auto& dst = by_id[r.example_id];
    dst.insert(dst.end(), pairs.begin(), pairs.end());
  }
  size_t total = 0;
  size_t correct = 0;
  for (const auto& e : gold.examples) {
    auto preds_it = by_id.find(e.id);
    std::vector<bool> used;
    if (preds_it != by_id.end()) used.assign(preds_it->second.size(), false);
    for (auto& [target, label] : detail::gold_pairs(e, seg)) {
      ++total;
      if (preds_it == by_id.end()) continue;
      for (size_t i = 0; i < preds_it->second.size(); ++i) {
        if (used[i] || preds_it->second[i].first != target) continue;
        used[i] = true;
        if (preds_it->second[i].second == label) ++correct;
        break;
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / total;
}

// ---------------------------------------------------------------------------
// Extraction / detection F1 (SB1, SB3)
// ---------------------------------------------------------------------------

// Micro-averaged F1 on the overlap of predicted and gold term (or category)
// string sets; polarity is ignored. All-empty corpora score 1.0 by
// convention.
inline double extraction_f1(const std::vector<PredictionRecord>& preds,
                            const Dataset& gold, PairSegment seg) {
  std::map<std::string, std::vector<std::string>> by_id;
  for (const auto& r : preds) {
    auto& dst = by_id[r.example_id];
    for (auto& [t, l] : detail::pred_pairs(r, seg)) dst.push_back(t);
  }

  auto dedup = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };

  size_t tp = 0;
  size_t pred_total = 0;
  size_t gold_total = 0;
  for (const auto& e : gold.examples) {
    std::vector<std::string> g;
    for (auto& [t, l] : detail::gold_pairs(e, seg)) g.push_back(t);
    g = dedup(std::move(g));
    std::vector<std::string> p;
    if (auto it = by_id.find(e.id); it != by_id.end()) p = dedup(it->second);
    std::vector<std::string> inter;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(),
                          std::back_inserter(inter));
    tp += inter.size();
    pred_total += p.size();
    gold_total += g.size();
  }

  if (pred_total == 0 && gold_total == 0) return 1.0;
  const double precision =
      pred_total == 0 ? 0.0 : static_cast<double>(tp) / pred_total;
  const double recall =
      gold_total == 0 ? 0.0 : static_cast<double>(tp) / gold_total;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Joint accuracy
// ---------------------------------------------------------------------------

// All-or-nothing per example: the predicted pair multiset must equal the
// gold multiset exactly (multi mode: both segments), with no parse
// failures. Missing predictions are wrong, not errors.
inline double joint_accuracy(const std::vector<PredictionRecord>& preds,
                             const Dataset& gold, TaskMode mode) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& r : preds) by_id.emplace(r.example_id, &r);

  size_t correct = 0;
  for (const auto& e : gold.examples) {
    auto it = by_id.find(e.id);
    if (it == by_id.end()) continue;
    const PredictionRecord& r = *it->second;
    if (!r.parse_failures.empty()) continue;
    bool ok = true;
    if (mode == TaskMode::multi || detail::primary_segment(mode) == PairSegment::term)
      ok = ok && detail::multiset_equal(detail::pred_pairs(r, PairSegment::term),
                                        detail::gold_pairs(e, PairSegment::term));
    if (mode == TaskMode::multi ||
        detail::primary_segment(mode) == PairSegment::category)
      ok = ok &&
           detail::multiset_equal(detail::pred_pairs(r, PairSegment::category),
                                  detail::gold_pairs(e, PairSegment::category));
    if (ok) ++correct;
  }
  return gold.examples.empty()
             ? 1.0
             : static_cast<double>(correct) / gold.examples.size();
}

// Relaxed companion to joint_accuracy: mean over examples of
// |pred ∩ gold| / max(|pred|, |gold|, 1) on the combined pair multiset.
// Dominates the all-or-nothing score by construction.
inline double pair_match_rate(const std::vector<PredictionRecord>& preds,
                              const Dataset& gold, TaskMode mode) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& r : preds) by_id.emplace(r.example_id, &r);

  auto tagged = [&](std::vector<detail::StrPair> terms,
                    std::vector<detail::StrPair> cats) {
    std::vector<detail::StrPair> out;
    for (auto& [t, l] : terms) out.emplace_back("T\x1f" + t, l);
    for (auto& [c, l] : cats) out.emplace_back("C\x1f" + c, l);
    return out;
  };

  double sum = 0.0;
  for (const auto& e : gold.examples) {
    auto g = tagged(detail::gold_pairs(e, PairSegment::term),
                    mode == TaskMode::multi ||
                            detail::primary_segment(mode) == PairSegment::category
                        ? detail::gold_pairs(e, PairSegment::category)
                        : std::vector<detail::StrPair>{});
    if (detail::primary_segment(mode) == PairSegment::category &&
        mode != TaskMode::multi)
      g = tagged({}, detail::gold_pairs(e, PairSegment::category));

    std::vector<detail::StrPair> p;
    if (auto it = by_id.find(e.id); it != by_id.end()) {
      const PredictionRecord& r = *it->second;
      if (detail::primary_segment(mode) == PairSegment::category &&
          mode != TaskMode::multi)
        p = tagged({}, detail::pred_pairs(r, PairSegment::category));
      else
        p = tagged(detail::pred_pairs(r, PairSegment::term),
                   mode == TaskMode::multi
                       ? detail::pred_pairs(r, PairSegment::category)
                       : std::vector<detail::StrPair>{});
    }
    const size_t overlap = detail::multiset_overlap(p, g);
    const size_t denom = std::max({p.size(), g.size(), size_t{1}});
    sum += static_cast<double>(overlap) / denom;
  }
  return gold.examples.empty() ? 1.0 : sum / gold.examples.size();
}

// ---------------------------------------------------------------------------
// Aggregation across seeds
// ---------------------------------------------------------------------------

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population definition (divisor n)
};

inline Aggregate aggregate(const std::vector<double>& seed_values) {
  if (seed_values.empty()) throw EmptyInput("aggregate of zero values");
  double mean = 0.0;
  for (double v : seed_values) mean += v;
  mean /= seed_values.size();
  double var = 0.0;
  for (double v : seed_values) var += (v - mean) * (v - mean);
  var /= seed_values.size();
  return {mean, std::sqrt(var)};
}

// "60.07 ± 0.52" table style: percent, two decimals.
inline std::string format_mean_std(const Aggregate& a) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << a.mean * 100.0 << " ± "
     << a.std * 100.0;
  return os.str();
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

struct RunReport {
  std::string task;
  std::string shot_label;
  // seed -> metric name -> value (fractions in [0,1])
  std::map<uint64_t, std::map<std::string, double>> per_seed;
  std::map<std::string, Aggregate> aggregated;
  struct Counts {
    size_t examples = 0;
    size_t parse_failures = 0;
    size_t truncated = 0;
  } counts;
  std::vector<std::string> notes;

  void finalize() {
    aggregated.clear();
    std::map<std::string, std::vector<double>> by_metric;
    for (const auto& [seed, metrics] : per_seed)
      for (const auto& [name, value] : metrics) by_metric[name].push_back(value);
    for (auto& [name, values] : by_metric) aggregated[name] = aggregate(values);
  }
};

inline json report_to_json(const RunReport& r) {
  json j;
  j["task"] = r.task;
  j["shot"] = r.shot_label;
  json seeds = json::object();
  for (const auto& [seed, metrics] : r.per_seed) {
    json m = json::object();
    for (const auto& [name, value] : metrics) m[name] = value;
    seeds[std::to_string(seed)] = std::move(m);
  }
  j["per_seed"] = std::move(seeds);
  json agg = json::object();
  for (const auto& [name, a] : r.aggregated)
    agg[name] = {{"mean", a.mean}, {"std", a.std}, {"display", format_mean_std(a)}};
  j["aggregate"] = std::move(agg);
  j["counts"] = {{"examples", r.counts.examples},
                 {"parse_failures", r.counts.parse_failures},
                 {"truncated", r.counts.truncated}};
  j["notes"] = r.notes;
  return j;
}

inline RunReport report_from_json(const json& j) {
  RunReport r;
  try {
    r.task = j.at("task").get<std::string>();
    r.shot_label = j.at("shot").get<std::string>();
    for (const auto& [seed, metrics] : j.at("per_seed").items())
      for (const auto& [name, value] : metrics.items())
        r.per_seed[std::stoull(seed)][name] = value.get<double>();
    if (j.contains("counts")) {
      r.counts.examples = j["counts"].value("examples", 0);
      r.counts.parse_failures = j["counts"].value("parse_failures", 0);
      r.counts.truncated = j["counts"].value("truncated", 0);
    }
    if (j.contains("notes"))
      r.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad report: ") + ex.what());
  }
  r.finalize();
  return r;
}

}  // namespace absagen
