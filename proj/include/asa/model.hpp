#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "asa/autograd.hpp"
#include "asa/common.hpp"

namespace asa {

inline constexpr int kQrDim = 256;
inline constexpr int kSyntaxDim = 247;
inline constexpr int kSpeechDim = 14;
inline constexpr int kSlotDim = 4;
inline constexpr int kGrammarStreamDim = 265;
inline constexpr int kNumClasses = 5;

/// Model input for one response. Sequence streams may carry trailing padding
/// rows; the *_len fields give the number of real rows (-1 = all rows).
struct FeatureBundle {
  Eigen::MatrixXd qr_seq;        // M x 256
  Eigen::MatrixXd syntax_seq;    // L x 247
  Eigen::MatrixXd delivery_seq;  // W x 14
  Eigen::VectorXd s_er;          // 4
  Eigen::VectorXd s_ir;          // 4
  Eigen::VectorXd grammar;       // 265
  int qr_len = -1;
  int syntax_len = -1;
  int delivery_len = -1;

  /// Throws ShapeError naming the offending stream.
  void validate() const;
};

enum class Aspect { kContent, kLanguageUse, kDelivery };
std::string to_string(Aspect a);
Aspect parse_aspect(const std::string& s);

/// Directed cross-aspect attention: queries from target, keys/values from source.
struct AspectPair {
  Aspect source;
  Aspect target;
  bool operator==(const AspectPair&) const = default;
};

enum class HeadKind { kClassification, kRegression };

struct ModelConfig {
  int hidden_dim = 256;
  int n_heads = 4;
  int n_encoder_layers = 3;
  int ffn_dim = 512;
  int conv_kernel = 3;
  int fusion_layers = 1;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  HeadKind head = HeadKind::kClassification;
  std::vector<AspectPair> cross_pairs = {{Aspect::kDelivery, Aspect::kContent},
                                         {Aspect::kLanguageUse, Aspect::kContent}};

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct ScorePrediction {
  Eigen::VectorXd logits;  // 5 entries for the classification head, empty otherwise
  double value = 0.0;      // regression output (expected score for classification)
  int score = 1;           // in 1..5
};

enum class SequenceStream { kQuestionResponse, kSyntax, kDelivery };
enum class FixedStream { kExemplarResponse, kImageResponse, kGrammar };

class ScoringModel {
 public:
  explicit ScoringModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::vector<ag::Parameter>& parameters() { return params_; }
  const std::vector<ag::Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  void zero_grad();

  /// Per-column standardization applied to real delivery rows before the
  /// convolution; fitted on training data.
  void set_delivery_standardization(Eigen::RowVectorXd mean, Eigen::RowVectorXd scale);
  const Eigen::RowVectorXd& delivery_mean() const { return delivery_mean_; }
  const Eigen::RowVectorXd& delivery_scale() const { return delivery_scale_; }

  /// Eval-mode prediction. Throws ShapeError for invalid bundles and
  /// NumericError naming the first layer with non-finite activations.
  ScorePrediction predict(const FeatureBundle& bundle) const;

  /// Loss against a gold score in 1..5. With grad_weight != 0 the gradient
  /// of grad_weight * loss is added to the parameters' grad fields. Dropout
  /// is active when `dropout_rng` is non-null.
  double loss(const FeatureBundle& bundle, int gold_score, Rng* dropout_rng = nullptr, double grad_weight = 0.0);

  // Building blocks, evaluated in eval mode.
  Eigen::MatrixXd encode_sequence_stream(SequenceStream stream, const Eigen::MatrixXd& x) const;
  Eigen::RowVectorXd project_fixed_stream(FixedStream stream, const Eigen::VectorXd& v) const;
  /// Applies the pair_index-th configured cross-aspect block. `source_valid`
  /// holds 1 for real and 0 for masked source rows (empty = all real).
  Eigen::MatrixXd cross_aspect_attention(std::size_t pair_index, const Eigen::MatrixXd& target,
                                         const Eigen::MatrixXd& source,
                                         const Eigen::VectorXd& source_valid = {}) const;

 private:
  struct Attention {
    int wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct Block {
    Attention attn;
    int ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  struct Encoder {
    int in_dim;
    int conv_w, conv_b;
    std::vector<Block> layers;
  };
  struct Projection {
    int w, b;
  };
  struct Seq {
    ag::Var x;
    Eigen::VectorXd valid;
  };
  struct Ctx;

  int add_param(const std::string& name, int rows, int cols, Rng& rng, double init_bound);
  int add_const_param(const std::string& name, int rows, int cols, double value);
  Attention make_attention(const std::string& prefix, Rng& rng);
  Block make_block(const std::string& prefix, Rng& rng);

  ag::Var p(Ctx& c, int index) const;
  ag::Var attention(Ctx& c, ag::Var q_in, ag::Var kv_in, const Eigen::VectorXd& kv_valid, const Attention& a) const;
  ag::Var block(Ctx& c, ag::Var x, ag::Var src, const Eigen::VectorXd& src_valid, const Block& b) const;
  ag::Var dropout(Ctx& c, ag::Var x) const;
  Seq encode(Ctx& c, const Encoder& e, const Eigen::MatrixXd& x, int len, bool standardize) const;
  ag::Var project(Ctx& c, const Projection& pr, const Eigen::VectorXd& v, const char* name) const;
  ag::Var forward(Ctx& c, const FeatureBundle& b) const;
  void check_finite(const Ctx& c, ag::Var v, const std::string& layer) const;

  ModelConfig config_;
  std::vector<ag::Parameter> params_;
  Encoder qr_, syntax_, delivery_;
  Projection er_, ir_, grammar_;
  std::vector<Block> cross_;
  std::vector<Block> fusion_;
  Projection head1_, head2_;
  Eigen::RowVectorXd delivery_mean_, delivery_scale_;
};

/// Sinusoidal position code, T x d.
Eigen::MatrixXd positional_encoding(int length, int dim);

/// Rows [x_{t-h} .. x_{t+h}] side by side with zero padding at the edges,
/// T x (kernel * D). Rows at or beyond `valid` are treated as zero.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel, int valid);

// ---------------------------------------------------------------------------
// Checkpoints: "ASACKPT\0", uint32 version, uint64 header length, JSON header
// (model config, parameter shapes, buffers, caller metadata), then every
// parameter as little-endian float64 in header order.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ScoringModel& model, const nlohmann::json& metadata);

struct LoadedCheckpoint {
  ScoringModel model;
  nlohmann::json metadata;
};

/// Throws IoError for unreadable files and CompatibilityError for foreign or
/// mismatched content.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace asa
