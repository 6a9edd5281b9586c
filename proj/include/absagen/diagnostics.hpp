#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "backend.hpp"
#include "core.hpp"

namespace absagen {

// Per-layer scalar series of cumulative normalized weight update.
struct LayerUpdateSeries {
  std::string layer;
  std::vector<double> values;  // one entry per step i >= 1
};

using LayerSnapshot = std::map<std::string, std::vector<float>>;

// Cumulative sum over steps i >= 1 of ||w_i - w_{i-1}||_2 / max(||w_0||_2, eps).
// Snapshot 0 is the pre-training state. The elementwise reading explodes on
// zero-initialized weights, so the norm-ratio form is used throughout.
inline std::map<std::string, LayerUpdateSeries> mean_normalized_update(
    const std::vector<LayerSnapshot>& snapshots) {
  constexpr double kEps = 1e-12;
  if (snapshots.size() < 2)
    throw TooFewSnapshots("need at least two snapshots");

  const LayerSnapshot& first = snapshots.front();
  for (const auto& snap : snapshots) {
    if (snap.size() != first.size())
      throw ShapeMismatch("snapshot layer sets differ");
    for (const auto& [name, values] : snap) {
      auto it = first.find(name);
      if (it == first.end() || it->second.size() != values.size())
        throw ShapeMismatch("layer '" + name + "' shape differs across snapshots");
    }
  }

  auto l2 = [](const std::vector<float>& v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * x;
    return std::sqrt(sum);
  };

  std::map<std::string, LayerUpdateSeries> out;
  for (const auto& [name, w0] : first) {
    const double denom = std::max(l2(w0), kEps);
    LayerUpdateSeries series{name, {}};
    double cumulative = 0.0;
    for (size_t i = 1; i < snapshots.size(); ++i) {
      const auto& prev = snapshots[i - 1].at(name);
      const auto& curr = snapshots[i].at(name);
      double sum = 0.0;
      for (size_t k = 0; k < curr.size(); ++k) {
        const double d = static_cast<double>(curr[k]) - prev[k];
        sum += d * d;
      }
      cumulative += std::sqrt(sum) / denom;
      series.values.push_back(cumulative);
    }
    out.emplace(name, std::move(series));
  }
  return out;
}

// Rows aligned to requested steps: largest recorded step <= request, else
// the earliest row. Empty request returns the full trace.
inline std::vector<LossTrace::Row> convergence_table(
    const LossTrace& trace, const std::vector<int64_t>& eval_points = {}) {
  if (trace.rows.empty()) throw Error("convergence_table on empty trace");
  if (eval_points.empty()) return trace.rows;

  std::vector<LossTrace::Row> out;
  for (int64_t requested : eval_points) {
    const LossTrace::Row* best = &trace.rows.front();
    for (const auto& row : trace.rows) {
      if (row.step <= requested) best = &row;
      else break;
    }
    out.push_back(*best);
  }
  return out;
}

// Tidy CSV: layer,step,cumulative_update.
inline void write_update_series_csv(
    const std::map<std::string, LayerUpdateSeries>& series, std::ostream& os) {
  os << "layer,step,cumulative_update\n";
  for (const auto& [name, s] : series)
    for (size_t i = 0; i < s.values.size(); ++i)
      os << name << ',' << (i + 1) << ',' << s.values[i] << '\n';
}

}  // namespace absagen
