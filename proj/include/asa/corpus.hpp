#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace asa {

struct QuestionSet {
  std::string id;
  std::vector<std::string> questions;
  std::string exemplar_text;
  /// Exemplar answers authored already split per question. When present the
  /// splitter backend is bypassed for the exemplar.
  std::optional<std::vector<std::string>> exemplar_segments;
  /// Prompt image, relative to the manifest directory.
  std::string image_ref;

  bool operator==(const QuestionSet&) const = default;
};

struct WordTimestamp {
  std::string token;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const WordTimestamp&) const = default;
};

struct ScoreLabel {
  std::optional<int> holistic;
  std::optional<int> relevance;
  std::optional<int> language_use;

  bool operator==(const ScoreLabel&) const = default;
};

enum class ScoreTarget { kHolistic, kRelevance, kLanguageUse };

std::string to_string(ScoreTarget t);
ScoreTarget parse_score_target(const std::string& s);
std::optional<int> score_for(const ScoreLabel& label, ScoreTarget target);

struct ResponseRecord {
  std::string id;
  std::string question_set_id;
  std::optional<std::string> audio_ref;
  std::string transcript;
  std::optional<std::vector<WordTimestamp>> word_timestamps;
  ScoreLabel scores;

  bool operator==(const ResponseRecord&) const = default;
};

/// Contents of one manifest. Relative paths are kept verbatim; resolve them
/// with resolve().
struct Corpus {
  std::filesystem::path base_dir;
  std::vector<QuestionSet> question_sets;
  std::vector<ResponseRecord> responses;

  const QuestionSet& question_set(const std::string& id) const;
  const ResponseRecord& response(const std::string& id) const;
  std::filesystem::path resolve(const std::string& relative) const;
};

struct LoadOptions {
  /// Require every question set's image to exist on disk.
  bool require_images = true;
  /// Require audio files referenced by responses to exist on disk.
  bool require_audio = true;
};

/// Reads a line-delimited manifest. Throws ParseError naming the offending
/// line/record, ReferentialIntegrityError for dangling question_set_id, and
/// IoError for unreadable files.
Corpus load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
void write_manifest(const Corpus& corpus, const std::filesystem::path& path);

nlohmann::json to_json(const QuestionSet& qs);
nlohmann::json to_json(const ResponseRecord& r);

/// Checks the per-record invariants (question count, score range, timestamp
/// ordering). Throws ParseError.
void validate(const QuestionSet& qs);
void validate(const ResponseRecord& r);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> known_test;
  std::vector<std::string> unknown_test;

  const std::vector<std::string>& get(const std::string& name) const;
  bool operator==(const CorpusSplit&) const = default;
};

nlohmann::json to_json(const CorpusSplit& split);
CorpusSplit split_from_json(const nlohmann::json& j);

/// Routes every response of `unknown_set_id` to unknown_test and partitions
/// the rest by `ratios` after a seeded shuffle: |train| = floor(r_train n),
/// |dev| = floor(r_dev n), remainder to known_test. An empty unknown_set_id
/// disables the unknown split.
CorpusSplit make_splits(const std::vector<QuestionSet>& question_sets,
                        const std::vector<ResponseRecord>& records,
                        const std::string& unknown_set_id, const SplitRatios& ratios,
                        std::uint64_t seed);

struct SyntheticOptions {
  int n_sets = 4;
  int n_per_set = 10;
  std::uint64_t seed = 0;
  /// Render a mono 16-bit WAV per response alongside the timestamps.
  bool with_audio = true;
  int sample_rate = 8000;
};

/// Writes manifest.jsonl plus images/ and audio/ under `out_dir` and returns
/// the manifest path. Output is byte-identical for identical options.
std::filesystem::path generate_synthetic_corpus(const std::filesystem::path& out_dir,
                                                const SyntheticOptions& options);

}  // namespace asa
