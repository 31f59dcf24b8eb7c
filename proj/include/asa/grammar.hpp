#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "asa/splitting.hpp"
#include "asa/syntax.hpp"

namespace asa {

// ---------------------------------------------------------------------------
// Correction backends
// ---------------------------------------------------------------------------

class GecBackend {
 public:
  virtual ~GecBackend() = default;
  virtual std::string correct_text(const std::string& raw_text) = 0;
};

/// Token-sequence rewrite. Patterns match lowercase tokens.
struct PhraseRule {
  std::vector<std::string> pattern;
  std::vector<std::string> replacement;
};

/// Deterministic rule-based corrector covering agreement, articles,
/// number, tense-with-time-adverb, duplicated words and a phrase table.
class RuleGecBackend final : public GecBackend {
 public:
  explicit RuleGecBackend(std::vector<PhraseRule> extra_rules = {});
  std::string correct_text(const std::string& raw_text) override;

 private:
  std::vector<PhraseRule> phrases_;
};

using FewShotExample = std::pair<std::string, std::string>;  // (raw, corrected)

/// Correction through an instruction model; few-shot pairs are prepended to
/// every prompt.
class ServiceGecBackend final : public GecBackend {
 public:
  ServiceGecBackend(std::shared_ptr<TextGenerator> generator, std::vector<FewShotExample> few_shot,
                    int max_tokens = 512);
  std::string correct_text(const std::string& raw_text) override;
  const std::vector<FewShotExample>& few_shot() const { return few_shot_; }

 private:
  std::shared_ptr<TextGenerator> generator_;
  std::vector<FewShotExample> few_shot_;
  int max_tokens_;
};

std::string build_gec_prompt(const std::vector<FewShotExample>& few_shot, const std::string& raw_text);

/// Reads few-shot pairs from JSONL lines {"raw": ..., "corrected": ...}.
std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path);

/// Throws InputError on empty input and CorrectionError on empty output.
std::string correct(GecBackend& backend, const std::string& raw_text);

/// Joins tokens, attaching closing punctuation to the previous token.
std::string detokenize(const std::vector<std::string>& tokens);

// ---------------------------------------------------------------------------
// Alignment and classification
// ---------------------------------------------------------------------------

enum class EditOp { kInsert, kDelete, kSubstitute };

struct EditSpan {
  std::size_t raw_begin = 0, raw_end = 0;    // [begin, end) in raw tokens
  std::size_t corr_begin = 0, corr_end = 0;  // [begin, end) in corrected tokens
  EditOp op = EditOp::kSubstitute;
  std::string error_type;

  std::size_t cost() const;
  bool operator==(const EditSpan&) const = default;
};

/// Minimal unit-cost alignment (case-insensitive equality) turned into
/// maximal runs of same-operation edits.
std::vector<EditSpan> align_edits(const std::vector<std::string>& raw_tokens,
                                  const std::vector<std::string>& corr_tokens);

std::size_t total_cost(const std::vector<EditSpan>& edits);

/// Error-type label for one edit: M:/U:/R: prefix plus a category taken
/// from the corrected side's part of speech and refined by morphology when
/// lemmas agree. "OTHER" when no rule applies.
std::string classify_edit(const EditSpan& edit, const std::vector<TokenAnnotation>& raw,
                          const std::vector<TokenAnnotation>& corr);

/// Prefix-free category of a UPOS tag ("" when the tag has none).
std::string pos_category(const std::string& upos);

// ---------------------------------------------------------------------------
// Taxonomy and features
// ---------------------------------------------------------------------------

inline constexpr const char* kOtherLabel = "OTHER";
inline constexpr int kGrammarDim = 265;

class ErrorTaxonomy {
 public:
  ErrorTaxonomy() : ErrorTaxonomy(std::vector<std::string>{kOtherLabel}, kGrammarDim) {}
  ErrorTaxonomy(std::vector<std::string> labels, int capacity);

  const std::vector<std::string>& labels() const { return labels_; }
  int capacity() const { return capacity_; }
  /// Index of a label; throws TaxonomyError if absent.
  std::size_t index_of(const std::string& label) const;
  bool contains(const std::string& label) const { return index_.count(label) > 0; }
  /// The label itself if known, OTHER otherwise.
  std::string canonical(const std::string& label) const;

  nlohmann::json to_json() const;
  static ErrorTaxonomy from_json(const nlohmann::json& j);
  std::string fingerprint() const;
  bool operator==(const ErrorTaxonomy& o) const { return labels_ == o.labels_ && capacity_ == o.capacity_; }

 private:
  std::vector<std::string> labels_;
  int capacity_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ranks labels by training frequency (ties alphabetical), keeps the top
/// capacity - 1 and appends OTHER.
ErrorTaxonomy freeze_taxonomy(const std::vector<std::string>& training_edit_labels, int capacity = kGrammarDim);

struct GrammarFeatureVector {
  Eigen::VectorXd freqs;   // capacity entries, c_k / N_w
  Eigen::VectorXd counts;  // capacity entries, c_k
  int word_count = 0;      // N_w(T_raw)
};

/// Counts labels per taxonomy entry and divides by the whitespace word
/// count of the raw text. Throws TaxonomyError for unknown labels and
/// InputError for an empty raw text.
GrammarFeatureVector grammar_features(const ErrorTaxonomy& taxonomy, const std::vector<std::string>& edit_labels,
                                      const std::string& raw_text);

/// Everything derived from one transcript.
struct GrammarAnalysis {
  std::string raw_text;
  std::string corrected_text;
  std::vector<std::string> raw_tokens;
  std::vector<std::string> corr_tokens;
  std::vector<EditSpan> edits;  // error_type filled in
};

GrammarAnalysis analyze_grammar(GecBackend& gec, const SyntacticAnnotationBackend& syntax,
                                const std::string& raw_text);

/// M2 block: "S <tokens>" then one "A start end|||type|||correction|||REQUIRED|||-NONE-|||0"
/// line per edit (a noop line when there are none), then a blank line.
std::string to_m2(const GrammarAnalysis& analysis);

}  // namespace asa
