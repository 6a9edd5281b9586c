#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"

namespace absagen {

// ---------------------------------------------------------------------------
// Portable RNG
// ---------------------------------------------------------------------------

// splitmix64: fixed 64-bit generator with cheap splittable streams. Sampling
// must be byte-identical across platforms and stdlib versions, so no
// std::uniform_* machinery is used anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased bound via rejection on the top 64 bits (Lemire).
  uint64_t bounded(uint64_t n) {
    if (n == 0) throw Error("bounded(0)");
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next();
      __uint128_t m = static_cast<__uint128_t>(r) * n;
      if (static_cast<uint64_t>(m) >= threshold)
        return static_cast<uint64_t>(m >> 64);
    }
  }

  // Derived stream for a named purpose, independent of draw order elsewhere.
  static SplitMix64 stream(uint64_t seed, std::string_view purpose) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : purpose) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    SplitMix64 mixer(seed ^ h);
    return SplitMix64(mixer.next());
  }

 private:
  uint64_t state_;
};

template <typename T>
void portable_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.bounded(i)]);
}

// ---------------------------------------------------------------------------
// Shot specification
// ---------------------------------------------------------------------------

struct ShotSpec {
  enum class Mode { fraction, per_class };
  Mode mode = Mode::fraction;
  double value = 1.0;  // fraction in (0,1], or integer k >= 1
  uint64_t seed = 0;

  void validate() const {
    if (mode == Mode::fraction) {
      if (!(value > 0.0 && value <= 1.0))
        throw Error("fraction shot value must be in (0,1]");
    } else {
      if (value < 1.0 || value != std::floor(value))
        throw Error("per-class shot value must be an integer >= 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<size_t> pick_without_replacement(size_t population,
                                                    size_t n,
                                                    SplitMix64& rng) {
  std::vector<size_t> idx(population);
  for (size_t i = 0; i < population; ++i) idx[i] = i;
  portable_shuffle(idx, rng);
  idx.resize(std::min(n, population));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// Uniform subset of max(1, floor(value * |train|)) examples, source order
// preserved.
inline Dataset sample_fraction(const Dataset& train, const ShotSpec& spec) {
  spec.validate();
  if (spec.mode != ShotSpec::Mode::fraction)
    throw Error("sample_fraction requires fraction mode");
  if (train.examples.empty()) throw EmptyTrain("empty train set");

  const size_t n = std::max<size_t>(
      1, static_cast<size_t>(std::floor(spec.value * train.examples.size())));
  SplitMix64 rng = SplitMix64::stream(spec.seed, "sample_fraction");
  auto idx = detail::pick_without_replacement(train.examples.size(), n, rng);

  Dataset out;
  out.name = train.name;
  out.split = train.split;
  out.examples.reserve(idx.size());
  for (size_t i : idx) out.examples.push_back(train.examples[i]);
  return out;
}

using ClassOf = std::function<std::vector<std::string>(const Example&)>;

// Per-class k-shot subset: a greedy pass over classes in seeded random
// order; an example claimed for one class is never re-claimed for another,
// so |result| <= k * #classes. Source order preserved.
inline Dataset sample_per_class(const Dataset& train, const ShotSpec& spec,
                                const ClassOf& class_of) {
  spec.validate();
  if (spec.mode != ShotSpec::Mode::per_class)
    throw Error("sample_per_class requires per_class mode");
  if (train.examples.empty()) throw EmptyTrain("empty train set");
  const size_t k = static_cast<size_t>(spec.value);

  // Class -> member indices, classes in first-seen order for determinism.
  std::vector<std::string> classes;
  std::map<std::string, std::vector<size_t>> members;
  bool any_class = false;
  for (size_t i = 0; i < train.examples.size(); ++i) {
    for (const auto& key : class_of(train.examples[i])) {
      any_class = true;
      auto [it, inserted] = members.try_emplace(key);
      if (inserted) classes.push_back(key);
      it->second.push_back(i);
    }
  }
  if (!any_class) throw NoClasses("class_of yields nothing for every example");

  SplitMix64 rng = SplitMix64::stream(spec.seed, "sample_per_class");
  portable_shuffle(classes, rng);

  std::vector<bool> taken(train.examples.size(), false);
  for (const auto& cls : classes) {
    std::vector<size_t> pool;
    for (size_t i : members[cls])
      if (!taken[i]) pool.push_back(i);
    portable_shuffle(pool, rng);
    for (size_t j = 0; j < std::min(k, pool.size()); ++j) taken[pool[j]] = true;
  }

  Dataset out;
  out.name = train.name;
  out.split = train.split;
  for (size_t i = 0; i < train.examples.size(); ++i)
    if (taken[i]) out.examples.push_back(train.examples[i]);
  return out;
}

// Class keys for per-class sampling: rendered category names for category
// tasks, sentence labels for SST/OOS.
inline ClassOf class_of_for_mode(TaskMode mode) {
  if (mode == TaskMode::sentence_label) {
    return [](const Example& e) {
      std::vector<std::string> keys;
      if (e.sentence_label) keys.push_back(normalize_text(e.sentence_label->label));
      return keys;
    };
  }
  if (is_category_mode(mode) || mode == TaskMode::multi) {
    return [](const Example& e) {
      std::vector<std::string> keys;
      for (const auto& c : e.categories) {
        std::string key = normalize_text(c.category);
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
          keys.push_back(std::move(key));
      }
      return keys;
    };
  }
  throw Error("per-class sampling has no class key for mode " +
              to_string(mode));
}

}  // namespace absagen
