#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "asa/model.hpp"

namespace asa {

// ---------------------------------------------------------------------------
// Tensor container: "ASATNSR\0", uint32 version, uint64 header length, JSON
// header {"meta": ..., "tensors": [{"name", "rows", "cols"}]}, then each
// tensor as row-major little-endian float64 in header order.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kTensorFileVersion = 1;

struct TensorFile {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Eigen::MatrixXd> tensors;

  /// Throws LookupError naming the missing tensor.
  const Eigen::MatrixXd& get(const std::string& name) const;
};

/// Written to a temporary file first and renamed into place.
void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
/// Throws IoError for unreadable files and ParseError for malformed content.
TensorFile read_tensor_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature toggles used by the ablation grid
// ---------------------------------------------------------------------------

struct FeatureToggles {
  /// Split responses per question before the similarity features.
  bool splitting = true;
  bool use_er = true;
  bool use_ir = true;
  /// The whole relevance-similarity module (splitting, ER and IR).
  bool multifaceted = true;
  bool use_grammar = true;
  /// Grammar stream carries c_k / N_w instead of raw counts c_k.
  bool grammar_normalized = true;

  nlohmann::json to_json() const;
  /// Unknown keys raise ConfigError.
  static FeatureToggles from_json(const nlohmann::json& j);
  bool operator==(const FeatureToggles&) const = default;
};

/// Names of the persisted bundle tensors.
namespace bundle_tensor {
inline constexpr const char* kQr = "qr_seq";
inline constexpr const char* kSyntax = "syntax_seq";
inline constexpr const char* kDelivery = "delivery_seq";
inline constexpr const char* kErSplit = "s_er_split";
inline constexpr const char* kIrSplit = "s_ir_split";
inline constexpr const char* kErWhole = "s_er_whole";
inline constexpr const char* kIrWhole = "s_ir_whole";
inline constexpr const char* kGrammarFreq = "grammar_freq";
inline constexpr const char* kGrammarCount = "grammar_count";
}  // namespace bundle_tensor

/// Picks the stream variants selected by `toggles`; disabled fixed streams
/// become zero vectors.
FeatureBundle assemble_bundle(const TensorFile& stored, const FeatureToggles& toggles);

// ---------------------------------------------------------------------------
// On-disk store
//   <root>/raw/<id>.asat       per-response intermediate features (cached)
//   <root>/bundles/<id>.asat   per-response model inputs, both variants
//   <root>/schemas.json        syntax schema, taxonomy, normalizers, split
//   <root>/extract_report.json
// ---------------------------------------------------------------------------

class FeatureStore {
 public:
  explicit FeatureStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path raw_path(const std::string& id) const;
  std::filesystem::path bundle_path(const std::string& id) const;
  std::filesystem::path schemas_path() const { return root_ / "schemas.json"; }
  std::filesystem::path report_path() const { return root_ / "extract_report.json"; }

  bool has_bundle(const std::string& id) const;
  /// Throws LookupError when the response was never extracted.
  TensorFile load_stored(const std::string& id) const;
  FeatureBundle load_bundle(const std::string& id, const FeatureToggles& toggles) const;
  /// Throws LookupError when the store has not been finalized.
  nlohmann::json load_schemas() const;

 private:
  std::filesystem::path root_;
};

/// Filename-safe form of a response id.
std::string safe_file_stem(const std::string& id);

}  // namespace asa
