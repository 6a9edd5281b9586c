#pragma once

// Brute-force scoring oracles, independent of the metrics implementation.
// Everything here recomputes from first principles with naive loops so the
// production code path is never exercised.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <absagen/core.hpp>
#include <absagen/seqcodec.hpp>

namespace oracle {

using absagen::Dataset;
using absagen::Example;
using absagen::PairSegment;
using absagen::PredictionRecord;
using absagen::TaskMode;
using absagen::normalize_text;

struct Pair {
  std::string text;
  std::string label;
  bool operator<(const Pair& o) const {
    return text != o.text ? text < o.text : label < o.label;
  }
  bool operator==(const Pair& o) const {
    return text == o.text && label == o.label;
  }
};

inline std::vector<Pair> gold_of(const Example& e, PairSegment seg) {
  std::vector<Pair> out;
  if (seg == PairSegment::term)
    for (const auto& t : e.terms)
      out.push_back({normalize_text(t.term), normalize_text(t.polarity.label)});
  else
    for (const auto& c : e.categories)
      out.push_back(
          {normalize_text(c.category), normalize_text(c.polarity.label)});
  return out;
}

inline std::vector<Pair> pred_of(const PredictionRecord& r, PairSegment seg) {
  std::vector<Pair> out;
  if (seg == PairSegment::term)
    for (const auto& t : r.terms)
      out.push_back({normalize_text(t.term), normalize_text(t.polarity.label)});
  else
    for (const auto& c : r.categories)
      out.push_back(
          {normalize_text(c.category), normalize_text(c.polarity.label)});
  return out;
}

// Accuracy over gold targets: walk every gold target, hunt for an unused
// prediction pair with the same target text, compare labels.
inline double polarity_accuracy(const std::vector<PredictionRecord>& preds,
                                const Dataset& gold, TaskMode mode) {
  const PairSegment seg = (mode == TaskMode::single_category ||
                           mode == TaskMode::joint_category)
                              ? PairSegment::category
                              : PairSegment::term;
  int total = 0;
  int correct = 0;
  for (const auto& e : gold.examples) {
    std::vector<Pair> pool;
    for (const auto& r : preds)
      if (r.example_id == e.id)
        for (const auto& p : pred_of(r, seg)) pool.push_back(p);
    std::vector<bool> used(pool.size(), false);

    std::vector<Pair> targets;
    if (mode == TaskMode::sentence_label)
      targets.push_back({"", normalize_text(e.sentence_label->label)});
    else
      targets = gold_of(e, seg);

    for (const auto& g : targets) {
      ++total;
      for (size_t i = 0; i < pool.size(); ++i) {
        if (used[i]) continue;
        if (mode != TaskMode::sentence_label && pool[i].text != g.text) continue;
        used[i] = true;
        if (pool[i].label == g.label) ++correct;
        break;
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / total;
}

// F1 from hand-counted TP/FP/FN over deduplicated string sets.
inline double extraction_f1(const std::vector<PredictionRecord>& preds,
                            const Dataset& gold, PairSegment seg) {
  int tp = 0, fp = 0, fn = 0;
  for (const auto& e : gold.examples) {
    std::set<std::string> gold_set;
    for (const auto& g : gold_of(e, seg)) gold_set.insert(g.text);
    std::set<std::string> pred_set;
    for (const auto& r : preds)
      if (r.example_id == e.id)
        for (const auto& p : pred_of(r, seg)) pred_set.insert(p.text);
    for (const auto& p : pred_set)
      gold_set.count(p) ? ++tp : ++fp;
    for (const auto& g : gold_set)
      if (!pred_set.count(g)) ++fn;
  }
  if (tp + fp + fn == 0) return 1.0;
  const double precision = tp + fp == 0 ? 0.0 : double(tp) / (tp + fp);
  const double recall = tp + fn == 0 ? 0.0 : double(tp) / (tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// All-or-nothing with sorted-multiset comparison.
inline double joint_accuracy(const std::vector<PredictionRecord>& preds,
                             const Dataset& gold, TaskMode mode) {
  int correct = 0;
  for (const auto& e : gold.examples) {
    const PredictionRecord* rec = nullptr;
    for (const auto& r : preds)
      if (r.example_id == e.id) {
        rec = &r;
        break;
      }
    if (!rec || !rec->parse_failures.empty()) continue;

    bool ok = true;
    auto match = [&](PairSegment seg) {
      auto a = gold_of(e, seg);
      auto b = pred_of(*rec, seg);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      return a == b;
    };
    if (mode == TaskMode::joint_term || mode == TaskMode::multi)
      ok = ok && match(PairSegment::term);
    if (mode == TaskMode::joint_category || mode == TaskMode::multi)
      ok = ok && match(PairSegment::category);
    if (ok) ++correct;
  }
  return gold.examples.empty()
             ? 1.0
             : static_cast<double>(correct) / gold.examples.size();
}

// Plain-loop norm arithmetic for the weight-update diagnostic.
inline std::vector<double> mean_normalized_update(
    const std::vector<std::vector<float>>& layer_snapshots) {
  double norm0 = 0.0;
  for (float x : layer_snapshots[0]) norm0 += double(x) * x;
  norm0 = std::sqrt(norm0);
  if (norm0 < 1e-12) norm0 = 1e-12;
  std::vector<double> series;
  double cum = 0.0;
  for (size_t i = 1; i < layer_snapshots.size(); ++i) {
    double d = 0.0;
    for (size_t k = 0; k < layer_snapshots[i].size(); ++k) {
      double diff = double(layer_snapshots[i][k]) - layer_snapshots[i - 1][k];
      d += diff * diff;
    }
    cum += std::sqrt(d) / norm0;
    series.push_back(cum);
  }
  return series;
}

}  // namespace oracle
