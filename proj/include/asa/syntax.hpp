#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace asa {

struct TokenAnnotation {
  std::string token;
  std::string upos;
  std::string lemma;
  std::string feats;   // "Feat=Val|Feat=Val", sorted, possibly empty
  std::string deprel;  // Universal Dependencies relation label
};

/// Splits a UD feature string into its Feat=Val pairs.
std::vector<std::string> feature_pairs(const std::string& feats);
/// Parses a UD feature string into a map.
std::map<std::string, std::string> feature_map(const std::string& feats);

/// Tagger/parser interface. Annotations cover every input token.
class SyntacticAnnotationBackend {
 public:
  virtual ~SyntacticAnnotationBackend() = default;
  virtual std::vector<TokenAnnotation> annotate(const std::vector<std::string>& tokens) const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic lexicon-and-context tagger with heuristic dependency
/// labels. Stands in for a statistical pipeline in tests and offline runs.
class RuleTagger final : public SyntacticAnnotationBackend {
 public:
  std::vector<TokenAnnotation> annotate(const std::vector<std::string>& tokens) const override;
  std::string name() const override { return "rules"; }
};

std::unique_ptr<SyntacticAnnotationBackend> make_syntax_backend(const std::string& name);

const std::vector<std::string>& universal_pos_tags();       // 17
const std::vector<std::string>& universal_dependency_relations();  // 37

/// Label-to-index layout of the 247-D syntax vector:
///   [0, 18)    UPOS one-hot (17 tags + UNK)
///   [18, 56)   dependency one-hot (37 relations + UNK)
///   [56, 247)  morphology multi-hot (190 Feat=Val pairs + UNK)
struct SyntaxSchema {
  static constexpr int kDim = 247;
  static constexpr int kPosBlock = 18;
  static constexpr int kDepBlock = 38;
  static constexpr int kMorphBlock = kDim - kPosBlock - kDepBlock;  // 191

  std::vector<std::string> pos_labels;    // 17, UNK implied last
  std::vector<std::string> dep_labels;    // 37, UNK implied last
  std::vector<std::string> morph_labels;  // <= 190, frequency ranked

  int pos_index(const std::string& upos) const;
  int dep_index(const std::string& rel) const;
  /// Index inside the full vector, or the morphology UNK slot.
  int morph_index(const std::string& pair) const;

  nlohmann::json to_json() const;
  static SyntaxSchema from_json(const nlohmann::json& j);
  std::string fingerprint() const;

  bool operator==(const SyntaxSchema&) const = default;
};

/// Ranks Feat=Val pairs by frequency over the training annotations (ties
/// alphabetical) and keeps the top 190.
SyntaxSchema freeze_syntax_schema(const std::vector<std::vector<TokenAnnotation>>& training);

/// L x 247 matrix, one row per token.
Eigen::MatrixXd encode_syntax(const SyntaxSchema& schema, const std::vector<TokenAnnotation>& annotations);

/// Tokenizes, annotates, and encodes a transcript. Throws InputError on an
/// empty transcript and AnnotationError when the backend misbehaves.
Eigen::MatrixXd syntax_features(const SyntacticAnnotationBackend& backend, const SyntaxSchema& schema,
                                const std::string& transcript);

}  // namespace asa
