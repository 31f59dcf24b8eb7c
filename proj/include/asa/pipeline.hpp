#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asa/corpus.hpp"
#include "asa/feature_store.hpp"
#include "asa/grammar.hpp"
#include "asa/model.hpp"
#include "asa/relevance.hpp"
#include "asa/splitting.hpp"
#include "asa/syntax.hpp"
#include "asa/traineval.hpp"

namespace asa {

// ---------------------------------------------------------------------------
// Configuration. One JSON file; every key optional. Environment variables
// ASA__<section>__<key> (or ASA__<key> for top-level keys) override it.
// ---------------------------------------------------------------------------

struct SplitSettings {
  std::string unknown_set;  // "" = no unknown-test split
  SplitRatios ratios;
};

struct SplitterSettings {
  std::string backend = "fallback";  // fallback | llm
  std::string endpoint;
  bool strict = false;
  int max_tokens = 1024;
};

/// Backend values: a built-in name or an http(s):// endpoint.
struct RelevanceSettings {
  std::string text_backend = "hashing";
  int text_dim = 256;
  std::string image_backend = "concept";
  int image_dim = 0;  // only used by endpoints
  std::string qr_backend = "hashing";
  int qr_dim = 64;
};

struct GrammarSettings {
  std::string backend = "rules";  // rules | service
  std::string endpoint;
  std::string few_shot;
};

struct SyntaxSettings {
  std::string backend = "rules";
};

struct AsrSettings {
  std::string backend = "manifest";  // manifest | http
  std::string endpoint;
};

struct ExtractSettings {
  int workers = 0;  // 0 = hardware concurrency, capped at 8
  bool use_audio = true;
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "asa-out";
  std::uint64_t seed = 0;
  SplitSettings split;
  SplitterSettings splitter;
  RelevanceSettings relevance;
  GrammarSettings grammar;
  SyntaxSettings syntax;
  AsrSettings asr;
  ExtractSettings extract;
  FeatureToggles features;
  ModelConfig model;
  TrainConfig train;

  nlohmann::json to_json() const;
  /// Throws ConfigError naming the first unknown or mistyped key.
  static PipelineConfig from_json(const nlohmann::json& j);
  /// Value and path checks. `need_manifest` also requires the manifest file.
  void validate(bool need_manifest) const;

  std::filesystem::path features_dir() const { return output_dir / "features"; }
  std::filesystem::path checkpoint_path() const { return output_dir / "model.ckpt"; }
};

/// Applies "ASA__section__key=value" entries onto a config document. Values
/// parse as JSON when possible and are taken as strings otherwise.
nlohmann::json apply_env_overrides(nlohmann::json config, const std::vector<std::string>& environment);

/// Reads the file (if any), applies overrides, and parses.
PipelineConfig load_config(const std::optional<std::filesystem::path>& path,
                           const std::vector<std::string>& environment);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct Backends {
  SplitterBackend splitter;
  std::unique_ptr<TextEmbeddingBackend> text;
  std::unique_ptr<ImageTextEmbeddingBackend> image;
  std::unique_ptr<ContextualEncoderBackend> qr;
  std::unique_ptr<GecBackend> gec;
  std::unique_ptr<SyntacticAnnotationBackend> syntax;
};

/// Throws ConfigError for unknown backend names.
Backends make_backends(const PipelineConfig& config);

/// Seed of the fixed question-response projection.
std::uint64_t qr_projection_seed(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct ExtractFailure {
  std::string id;
  std::string kind;
  std::string message;
};

struct ExtractSummary {
  std::size_t total = 0;
  std::size_t computed = 0;
  std::size_t cached = 0;
  std::vector<ExtractFailure> failures;

  nlohmann::json to_json() const;
};

/// Extracts every response into the feature store, reusing cached records
/// whose inputs hash unchanged, then freezes the syntax schema, taxonomy and
/// similarity normalizers on the training split and writes model-ready
/// bundles. Per-response failures are collected, not thrown.
ExtractSummary extract_features(const PipelineConfig& config);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
};

TrainSummary train_command(const PipelineConfig& config);

/// Evaluates a checkpoint on one split, persisting <output>/reports/<split>.{json,txt}.
/// Throws CompatibilityError naming the schema that differs from the store.
EvalReport eval_command(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                        const std::string& split);

/// Base configuration plus one cell per feature toggle, each flipped off.
std::vector<AblationCell> standard_ablation_grid(const PipelineConfig& base);

/// Trains and evaluates every cell against the base feature store and writes
/// <output>/ablation/{table.txt,results.json}.
std::vector<AblationRow> ablate_command(const PipelineConfig& config, const std::vector<AblationCell>& grid);

/// In-memory training on the extracted store; used by train and ablate.
struct TrainedModel {
  TrainResult result;
  nlohmann::json metadata;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
};
TrainedModel train_from_store(const PipelineConfig& config, std::ostream* jsonl_log);

/// Examples of one split that have bundles and a gold score for `target`.
struct SplitExamples {
  std::vector<FeatureBundle> bundles;
  std::vector<LabeledExample> examples;
};
/// Throws InputError for an unknown split name.
SplitExamples load_split_examples(const FeatureStore& store, const CorpusSplit& split, const std::string& split_name,
                                  ScoreTarget target, const FeatureToggles& toggles);

}  // namespace asa
