#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "asa/media.hpp"

namespace asa {

// ---------------------------------------------------------------------------
// Embedding backends
// ---------------------------------------------------------------------------

/// Sentence encoder. Identical text must give identical vectors.
class TextEmbeddingBackend {
 public:
  virtual ~TextEmbeddingBackend() = default;
  virtual Eigen::VectorXd embed(const std::string& text) = 0;
  virtual int embedding_dim() const = 0;
};

/// Joint image/text encoder; both embeddings live in one joint_dim space.
class ImageTextEmbeddingBackend {
 public:
  virtual ~ImageTextEmbeddingBackend() = default;
  virtual Eigen::VectorXd embed_image(const Image& image) = 0;
  virtual Eigen::VectorXd embed_text(const std::string& text) = 0;
  virtual int joint_dim() const = 0;
};

struct ContextualEncoding {
  Eigen::VectorXd summary;  // [CLS]-style vector
  Eigen::MatrixXd tokens;   // M x token_dim
};

/// Contextual token encoder. For an empty input it returns a single padding
/// token so that M >= 1.
class ContextualEncoderBackend {
 public:
  virtual ~ContextualEncoderBackend() = default;
  virtual ContextualEncoding encode(const std::string& text) = 0;
  virtual int token_dim() const = 0;
};

/// Signed feature hashing over lemmatized content words plus a concept
/// feature for visual-concept keywords, L2-normalized.
class HashingSentenceEncoder final : public TextEmbeddingBackend {
 public:
  explicit HashingSentenceEncoder(int dim = 256) : dim_(dim) {}
  Eigen::VectorXd embed(const std::string& text) override;
  int embedding_dim() const override { return dim_; }

 private:
  int dim_;
};

/// Image side: fraction of pixels within a colour radius of each concept's
/// reference colour. Text side: keyword counts per concept.
class ConceptImageTextEncoder final : public ImageTextEmbeddingBackend {
 public:
  Eigen::VectorXd embed_image(const Image& image) override;
  Eigen::VectorXd embed_text(const std::string& text) override;
  int joint_dim() const override;
};

/// Per-token vectors from seeded word hashes mixed with their neighbours and
/// a sinusoidal position code; the summary vector is the token mean.
class HashingContextualEncoder final : public ContextualEncoderBackend {
 public:
  explicit HashingContextualEncoder(int dim = 64) : dim_(dim) {}
  ContextualEncoding encode(const std::string& text) override;
  int token_dim() const override { return dim_; }
  Eigen::VectorXd word_vector(const std::string& lower_word) const;

 private:
  int dim_;
};

/// POST {"text": ...} -> {"embedding": [...]}.
class HttpTextEmbedder final : public TextEmbeddingBackend {
 public:
  HttpTextEmbedder(std::string endpoint, int dim);
  Eigen::VectorXd embed(const std::string& text) override;
  int embedding_dim() const override { return dim_; }

 private:
  std::string endpoint_;
  int dim_;
};

/// POST {"text": ...} or {"image_ppm_base64": ...} -> {"embedding": [...]}.
class HttpImageTextEmbedder final : public ImageTextEmbeddingBackend {
 public:
  HttpImageTextEmbedder(std::string endpoint, int dim);
  Eigen::VectorXd embed_image(const Image& image) override;
  Eigen::VectorXd embed_text(const std::string& text) override;
  int joint_dim() const override { return dim_; }

 private:
  std::string endpoint_;
  int dim_;
};

/// POST {"text": ...} -> {"cls": [...], "tokens": [[...], ...]}.
class HttpContextualEncoder final : public ContextualEncoderBackend {
 public:
  HttpContextualEncoder(std::string endpoint, int dim);
  ContextualEncoding encode(const std::string& text) override;
  int token_dim() const override { return dim_; }

 private:
  std::string endpoint_;
  int dim_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

// ---------------------------------------------------------------------------
// Similarities and normalization
// ---------------------------------------------------------------------------

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Raw similarity, or nullopt (the no-response sentinel) when r_i is empty.
std::optional<double> exemplar_response_similarity(TextEmbeddingBackend& backend, const std::string& exemplar_segment,
                                                   const std::string& response_segment);
std::optional<double> image_response_similarity(ImageTextEmbeddingBackend& backend, const Image& image,
                                                const std::string& response_segment);

class SimilarityNormalizer {
 public:
  static constexpr double kFloor = 0.01;

  struct Range {
    double min = 0.0;
    double max = 0.0;
    bool constant = false;
    bool fitted = false;
    bool operator==(const Range&) const = default;
  };

  SimilarityNormalizer() = default;
  explicit SimilarityNormalizer(std::vector<Range> ranges) : ranges_(std::move(ranges)) {}

  /// 0 for no-response; otherwise 0.01 + 0.99 * clip((sim - min) / (max - min), 0, 1),
  /// or 1.0 for a constant-flagged question. Throws LookupError for an
  /// unfitted index.
  double normalize(std::size_t question_index, std::optional<double> sim) const;

  const std::vector<Range>& ranges() const { return ranges_; }
  nlohmann::json to_json() const;
  static SimilarityNormalizer from_json(const nlohmann::json& j);
  bool operator==(const SimilarityNormalizer&) const = default;

 private:
  std::vector<Range> ranges_;
};

/// Fits per-question (min, max) on training similarities. Sentinels are
/// skipped; a question whose list holds only sentinels raises FitError.
/// An empty list leaves that index unfitted.
SimilarityNormalizer fit_normalizer(const std::vector<std::vector<std::optional<double>>>& raw_sims);

// ---------------------------------------------------------------------------
// Question-response stream
// ---------------------------------------------------------------------------

inline constexpr int kQuestionResponseDim = 256;
inline constexpr std::size_t kRelevanceSlots = 4;

/// Fixed seeded Gaussian map from the [summary ; token] concatenation to 256.
class QuestionResponseProjector {
 public:
  QuestionResponseProjector(int token_dim, std::uint64_t seed);
  Eigen::MatrixXd project(const Eigen::MatrixXd& concatenated) const;
  int input_dim() const { return static_cast<int>(weights_.cols()); }
  std::uint64_t seed() const { return seed_; }

 private:
  Eigen::MatrixXd weights_;  // 256 x (2 * token_dim)
  std::uint64_t seed_;
};

/// Row i = [summary(question) ; token_i(response)], M x (2 * token_dim).
Eigen::MatrixXd question_response_concat(ContextualEncoderBackend& backend, const std::string& question,
                                         const std::string& response);

/// M x 256 question-response sequence.
Eigen::MatrixXd question_response_features(ContextualEncoderBackend& backend,
                                           const QuestionResponseProjector& projector, const std::string& question,
                                           const std::string& response);

struct RelevanceFeatures {
  std::array<double, kRelevanceSlots> s_er{};
  std::array<double, kRelevanceSlots> s_ir{};
  Eigen::MatrixXd f_qr;
};

/// Normalizes k raw similarities into the fixed 4-slot layout (unused slots 0).
std::array<double, kRelevanceSlots> normalize_slots(const SimilarityNormalizer& normalizer,
                                                    const std::vector<std::optional<double>>& raw);

}  // namespace asa
