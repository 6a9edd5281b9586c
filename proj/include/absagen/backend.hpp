#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "fewshot.hpp"
#include "seqcodec.hpp"

namespace absagen {

// ---------------------------------------------------------------------------
// Training configuration and loss trace
// ---------------------------------------------------------------------------

struct TrainConfig {
  int max_steps = 100;   // used when epochs == 0
  int epochs = 0;        // full passes over the data; 0 = cap by max_steps
  int batch_size = 4;
  double learning_rate = 5e-5;
  int max_seq_len = 512;
  int eval_interval = 0;  // 0 = no dev evaluation
  bool probe_lm_loss = true;
  bool probe_label_position_loss = false;
  // Label vocabulary for locating label positions inside sequences.
  std::vector<std::string> label_vocabulary;
  uint64_t seed = 0;

  void validate() const {
    if (max_steps <= 0 && epochs <= 0)
      throw Error("TrainConfig: need positive max_steps or epochs");
    if (batch_size <= 0) throw Error("TrainConfig: batch_size must be positive");
    if (learning_rate <= 0) throw Error("TrainConfig: learning_rate must be positive");
    if (max_seq_len <= 0) throw Error("TrainConfig: max_seq_len must be positive");
    if (probe_label_position_loss && label_vocabulary.empty())
      throw Error("TrainConfig: label_position_loss needs a label vocabulary");
  }
};

inline json train_config_to_json(const TrainConfig& c) {
  return json{{"max_steps", c.max_steps},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"max_seq_len", c.max_seq_len},
              {"eval_interval", c.eval_interval},
              {"probe_lm_loss", c.probe_lm_loss},
              {"probe_label_position_loss", c.probe_label_position_loss},
              {"label_vocabulary", c.label_vocabulary},
              {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.max_steps = j.value("max_steps", c.max_steps);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
  c.eval_interval = j.value("eval_interval", c.eval_interval);
  c.probe_lm_loss = j.value("probe_lm_loss", c.probe_lm_loss);
  c.probe_label_position_loss =
      j.value("probe_label_position_loss", c.probe_label_position_loss);
  if (j.contains("label_vocabulary"))
    c.label_vocabulary = j["label_vocabulary"].get<std::vector<std::string>>();
  c.seed = j.value("seed", c.seed);
  return c;
}

struct LossTrace {
  struct Row {
    int64_t step = 0;
    double lm_loss = 0.0;
    std::optional<double> label_position_loss;
    std::optional<double> dev_accuracy;
  };
  std::vector<Row> rows;

  void append(Row row) {
    if (!rows.empty() && row.step <= rows.back().step)
      throw Error("LossTrace steps must be strictly increasing");
    rows.push_back(std::move(row));
  }

  void write_csv(std::ostream& os) const {
    os << "step,lm_loss,label_position_loss,dev_accuracy\n";
    for (const auto& r : rows) {
      os << r.step << ',' << r.lm_loss << ',';
      if (r.label_position_loss) os << *r.label_position_loss;
      os << ',';
      if (r.dev_accuracy) os << *r.dev_accuracy;
      os << '\n';
    }
  }

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for write: " + path);
    write_csv(os);
  }
};

// Called at eval_interval steps; returns dev accuracy.
using EvalFn = std::function<double()>;

// ---------------------------------------------------------------------------
// Backend contract
// ---------------------------------------------------------------------------

// Narrow contract between the harness and a causal LM. One instance is
// owned by one run at a time; the harness parallelizes across processes.
class LmBackend {
 public:
  virtual ~LmBackend() = default;

  virtual std::string id() const = 0;

  // Fine-tune on training sequences with next-token cross-entropy over all
  // positions (per-token average). Mutates the model.
  virtual LossTrace fit_generative(const std::vector<TaskSequence>& sequences,
                                   const TrainConfig& cfg,
                                   const EvalFn& eval = {}) = 0;

  // Greedy decoding; stops at the earliest of the prompt's stop_string, the
  // token budget, or end-of-text. Returns continuation text only.
  virtual std::string generate(const TaskSequence& prompt,
                               int max_new_tokens) = 0;

  // Attach a randomly initialized linear head of the given width over the
  // final hidden state of the last input token. predict_class is valid (in
  // range) from this point on, trained or not.
  virtual void attach_classifier_head(int n_classes) = 0;

  // Classifier-head ablation: trains head + backbone with class
  // cross-entropy only. Attaches the head if not already attached.
  virtual void fit_classifier(
      const std::vector<std::pair<std::string, int>>& items, int n_classes,
      const TrainConfig& cfg) = 0;

  virtual int predict_class(const std::string& prompt) = 0;

  // Copied parameter vectors keyed embedding, block_0..block_{L-1}, head.
  virtual std::map<std::string, std::vector<float>> snapshot_layers() const = 0;

  // Checkpoint directory: config.json, weights.bin, manifest.json.
  virtual void save(const std::string& dir) const = 0;
};

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

// Deterministic table-driven stand-in. Training memorizes sequences;
// generation replays the continuation of the first memorized sequence that
// extends the prompt. Losses follow a fixed decay so traces are exactly
// reproducible. Tokens are whitespace-delimited words.
class MockBackend : public LmBackend {
 public:
  struct Config {
    int n_layers = 2;
    int layer_dim = 8;
    int max_seq_len = 1024;
    uint64_t seed = 0;
  };

  explicit MockBackend(Config cfg = {}) : cfg_(cfg) { init_layers(); }

  std::string id() const override { return "mock"; }

  void set_canned(std::string prompt, std::string continuation) {
    canned_[std::move(prompt)] = std::move(continuation);
  }

  LossTrace fit_generative(const std::vector<TaskSequence>& sequences,
                           const TrainConfig& cfg,
                           const EvalFn& eval = {}) override {
    cfg.validate();
    if (sequences.empty()) throw EmptyTrainingSet("no training sequences");
    for (const auto& s : sequences) {
      if (s.role != SeqRole::train)
        throw Error("fit_generative requires train-role sequences");
      if (word_count(s.text) > static_cast<size_t>(cfg.max_seq_len))
        throw SequenceTooLong("sequence for example '" + s.example_id +
                              "' exceeds max_seq_len");
      memory_.push_back(s.text);
    }

    const int steps = total_steps(cfg, sequences.size());
    const double initial =
        4.0 + 1.0 / (1.0 + static_cast<double>(sequences.size()));
    LossTrace trace;
    for (int step = 1; step <= steps; ++step) {
      LossTrace::Row row;
      row.step = step;
      row.lm_loss = initial * std::pow(0.92, step);
      if (cfg.probe_label_position_loss)
        row.label_position_loss = 0.8 * row.lm_loss;
      if (cfg.eval_interval > 0 && eval && step % cfg.eval_interval == 0)
        row.dev_accuracy = eval();
      trace.append(std::move(row));
      perturb_layers(step, cfg.learning_rate);
    }
    return trace;
  }

  std::string generate(const TaskSequence& prompt,
                       int max_new_tokens) override {
    if (prompt.role != SeqRole::prompt)
      throw Error("generate requires a prompt-role sequence");
    if (word_count(prompt.text) > static_cast<size_t>(cfg_.max_seq_len))
      throw PromptTooLong("prompt for example '" + prompt.example_id +
                          "' exceeds max_seq_len");
    if (max_new_tokens <= 0) return "";

    std::string continuation;
    if (auto it = canned_.find(prompt.text); it != canned_.end()) {
      continuation = it->second;
    } else {
      for (const auto& text : memory_) {
        if (text.size() > prompt.text.size() &&
            text.compare(0, prompt.text.size(), prompt.text) == 0) {
          continuation = text.substr(prompt.text.size());
          break;
        }
      }
    }
    return clip(continuation, prompt.stop_string, max_new_tokens);
  }

  void attach_classifier_head(int n_classes) override {
    if (n_classes < 2) throw Error("classifier head needs n_classes >= 2");
    n_classes_ = n_classes;
  }

  void fit_classifier(const std::vector<std::pair<std::string, int>>& items,
                      int n_classes, const TrainConfig& cfg) override {
    cfg.validate();
    if (items.empty()) throw EmptyTrainingSet("no classifier items");
    attach_classifier_head(n_classes);
    int step = 0;
    for (const auto& [prompt, cls] : items) {
      if (cls < 0 || cls >= n_classes)
        throw Error("class index out of range");
      class_table_[prompt] = cls;
      perturb_layers(++step, cfg.learning_rate);
    }
  }

  int predict_class(const std::string& prompt) override {
    if (n_classes_ <= 0)
      throw Error("predict_class before fit_classifier: head width unknown");
    if (auto it = class_table_.find(prompt); it != class_table_.end())
      return it->second;
    return static_cast<int>(fnv1a(prompt) % static_cast<uint64_t>(n_classes_));
  }

  std::map<std::string, std::vector<float>> snapshot_layers() const override {
    return layers_;  // map copy; vectors are value types
  }

  void save(const std::string& dir) const override {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json config{{"backend", "mock"},
                {"n_layers", cfg_.n_layers},
                {"layer_dim", cfg_.layer_dim},
                {"max_seq_len", cfg_.max_seq_len},
                {"seed", cfg_.seed}};
    std::ofstream(dir + "/config.json") << config.dump(2) << '\n';

    std::ofstream weights(dir + "/weights.bin", std::ios::binary);
    for (const auto& [name, values] : layers_)
      weights.write(reinterpret_cast<const char*>(values.data()),
                    static_cast<std::streamsize>(values.size() * sizeof(float)));

    json manifest{{"memory", memory_},
                  {"canned", canned_},
                  {"n_classes", n_classes_},
                  {"class_table", class_table_}};
    std::ofstream(dir + "/manifest.json") << manifest.dump(2) << '\n';
  }

  static std::unique_ptr<MockBackend> load(const std::string& dir) {
    std::ifstream cfg_in(dir + "/config.json");
    if (!cfg_in) throw Error("missing checkpoint config: " + dir);
    json config = json::parse(cfg_in);
    Config cfg;
    cfg.n_layers = config.value("n_layers", cfg.n_layers);
    cfg.layer_dim = config.value("layer_dim", cfg.layer_dim);
    cfg.max_seq_len = config.value("max_seq_len", cfg.max_seq_len);
    cfg.seed = config.value("seed", cfg.seed);
    auto backend = std::make_unique<MockBackend>(cfg);

    std::ifstream weights(dir + "/weights.bin", std::ios::binary);
    if (weights)
      for (auto& [name, values] : backend->layers_)
        weights.read(reinterpret_cast<char*>(values.data()),
                     static_cast<std::streamsize>(values.size() * sizeof(float)));

    std::ifstream man_in(dir + "/manifest.json");
    if (man_in) {
      json manifest = json::parse(man_in);
      backend->memory_ = manifest.value("memory", std::vector<std::string>{});
      if (manifest.contains("canned"))
        backend->canned_ =
            manifest["canned"].get<std::map<std::string, std::string>>();
      backend->n_classes_ = manifest.value("n_classes", -1);
      if (manifest.contains("class_table"))
        backend->class_table_ =
            manifest["class_table"].get<std::map<std::string, int>>();
    }
    return backend;
  }

  static int total_steps(const TrainConfig& cfg, size_t n_sequences) {
    if (cfg.epochs > 0) {
      const auto per_epoch = static_cast<int>(
          (n_sequences + cfg.batch_size - 1) / cfg.batch_size);
      return cfg.epochs * std::max(1, per_epoch);
    }
    return cfg.max_steps;
  }

 private:
  static size_t word_count(std::string_view s) {
    size_t n = 0;
    bool in_word = false;
    for (char c : s) {
      if (c == ' ') {
        in_word = false;
      } else if (!in_word) {
        in_word = true;
        ++n;
      }
    }
    return n;
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  // Word-by-word replay honoring the stopping rule: stop_string, then
  // token budget.
  static std::string clip(const std::string& continuation,
                          const std::string& stop, int max_new_tokens) {
    std::string out;
    int words = 0;
    size_t i = 0;
    while (i < continuation.size() && words < max_new_tokens) {
      size_t start = i;
      while (i < continuation.size() && continuation[i] == ' ') ++i;
      size_t word_begin = i;
      while (i < continuation.size() && continuation[i] != ' ') ++i;
      if (word_begin == i) break;
      out.append(continuation, start, i - start);
      ++words;
      if (!stop.empty()) {
        size_t pos = out.find(stop);
        if (pos != std::string::npos) return out.substr(0, pos + stop.size());
      }
    }
    return out;
  }

  void init_layers() {
    SplitMix64 rng = SplitMix64::stream(cfg_.seed, "mock_layers");
    auto fill = [&](const std::string& name) {
      std::vector<float> v(static_cast<size_t>(cfg_.layer_dim));
      for (auto& x : v)
        x = static_cast<float>(rng.bounded(1000)) / 1000.0f - 0.5f;
      layers_[name] = std::move(v);
    };
    fill("embedding");
    for (int i = 0; i < cfg_.n_layers; ++i)
      fill("block_" + std::to_string(i));
    fill("head");
  }

  void perturb_layers(int step, double lr) {
    size_t layer_index = 0;
    for (auto& [name, values] : layers_) {
      for (size_t i = 0; i < values.size(); ++i)
        values[i] += static_cast<float>(
            lr * (1.0 + static_cast<double>((layer_index + i + step) % 7)));
      ++layer_index;
    }
  }

  Config cfg_;
  std::map<std::string, std::vector<float>> layers_;
  std::vector<std::string> memory_;
  std::map<std::string, std::string> canned_;
  std::map<std::string, int> class_table_;
  int n_classes_ = -1;
};

}  // namespace absagen
