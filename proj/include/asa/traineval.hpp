#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asa/corpus.hpp"
#include "asa/model.hpp"

namespace asa {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Fraction of exact matches. Throws InputError on empty or unequal inputs.
double accuracy(const std::vector<int>& preds, const std::vector<int>& golds);

/// Accuracy after mapping each score s to (s >= 4). Scores must lie in 1..5.
double binary_accuracy(const std::vector<int>& preds, const std::vector<int>& golds);

/// Minimal number of substitutions, deletions and insertions.
std::size_t token_edit_distance(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

/// (S + D + I) / |reference|. Throws InputError for an empty reference.
double word_error_rate(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

struct EvalReport {
  std::string split;
  std::string target;
  std::size_t n = 0;
  double accuracy = 0.0;
  double binary_accuracy = 0.0;
  std::array<std::array<int, 5>, 5> confusion{};  // [gold - 1][pred - 1]
  std::vector<std::string> ids;
  std::vector<int> preds;
  std::vector<int> golds;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

struct LabeledExample {
  std::string id;
  const FeatureBundle* bundle = nullptr;
  int gold = 0;
};

/// Throws InputError for an empty split.
EvalReport evaluate(const ScoringModel& model, const std::vector<LabeledExample>& examples, const std::string& split,
                    const std::string& target);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 32;
  int batch_size = 32;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 0.0;
  /// Stop once every training example is predicted correctly.
  bool stop_at_perfect_train = false;
  ScoreTarget target = ScoreTarget::kHolistic;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

/// Decoupled weight decay Adam. Decay applies to weight matrices only (not
/// to biases or layer-norm gains, which are single rows).
class AdamW {
 public:
  AdamW(const std::vector<ag::Parameter>& params, const TrainConfig& config);
  void step(std::vector<ag::Parameter>& params);
  long steps() const { return t_; }

 private:
  TrainConfig config_;
  std::vector<Eigen::MatrixXd> m_, v_;
  long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;
  bool best = false;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ScoringModel best_model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
};

/// Mini-batch training with seeded shuffling and dropout. Keeps the
/// parameters of the epoch with the highest dev accuracy (first one wins on
/// ties; training accuracy decides when the dev split is empty). With zero
/// epochs the initial model is returned. Each epoch is appended to
/// `jsonl_log` as one JSON line.
TrainResult train(ScoringModel model, const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& dev_set, const TrainConfig& config, std::uint64_t seed,
                  std::ostream* jsonl_log = nullptr);

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

struct AblationCell {
  std::string name;
  nlohmann::json config;  // full pipeline configuration for this run
};

struct AblationRow {
  std::string name;
  bool ok = false;
  std::string error;
  nlohmann::json config_diff;  // flattened keys that differ from the first cell
  std::map<std::string, EvalReport> reports;  // by split name

  nlohmann::json to_json() const;
};

using AblationRunner = std::function<std::map<std::string, EvalReport>(const AblationCell&)>;

/// Runs every cell; a failing cell is recorded and the grid continues.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid, const AblationRunner& runner);

/// Flattened "section.key" paths whose values differ, mapped to
/// {"base": ..., "cell": ...}.
nlohmann::json config_diff(const nlohmann::json& base, const nlohmann::json& other);

/// Fixed-width comparison table, one row per cell, Acc and Bin Acc per split.
std::string ablation_table(const std::vector<AblationRow>& rows, const std::vector<std::string>& splits);

}  // namespace asa
