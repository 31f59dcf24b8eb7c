#include "asa/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "asa/common.hpp"
#include "asa/http_client.hpp"
#include "asa/lexicon.hpp"

namespace asa {

namespace {

constexpr std::uint64_t kWordSeed = 0x5eedf00dULL;

Eigen::VectorXd json_vector(const nlohmann::json& j, int dim, const char* what) {
  if (!j.is_array()) throw EmbeddingError(std::string(what) + ": expected an array");
  if (static_cast<int>(j.size()) != dim)
    throw EmbeddingError(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got " +
                         std::to_string(j.size()));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

std::string lemma_of(const std::string& lower) {
  const auto& rs = lexicon::readings(lower);
  return rs.empty() ? lower : to_lower(rs.front().lemma);
}

void add_hashed(Eigen::VectorXd& v, const std::string& feature, double weight) {
  const std::uint64_t h = fnv1a(feature);
  const auto dim = static_cast<std::uint64_t>(v.size());
  v(static_cast<Eigen::Index>(h % dim)) += (h >> 63) ? weight : -weight;
  const std::uint64_t h2 = fnv1a(feature, h);
  v(static_cast<Eigen::Index>(h2 % dim)) += (h2 >> 63) ? 0.5 * weight : -0.5 * weight;
}

}  // namespace

// --- hashing sentence encoder -----------------------------------------------

Eigen::VectorXd HashingSentenceEncoder::embed(const std::string& text) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  for (const auto& tok : tokenize(text)) {
    if (is_punct_token(tok)) continue;
    const std::string lower = to_lower(tok);
    if (lexicon::is_stopword(lower)) continue;
    add_hashed(v, "w:" + lemma_of(lower), 1.0);
    if (auto c = lexicon::concept_of(lower)) add_hashed(v, "c:" + lexicon::concepts()[*c].name, 1.0);
  }
  const double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

// --- concept image/text encoder ---------------------------------------------

int ConceptImageTextEncoder::joint_dim() const { return static_cast<int>(lexicon::concepts().size()); }

Eigen::VectorXd ConceptImageTextEncoder::embed_image(const Image& image) {
  const auto& cs = lexicon::concepts();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cs.size()));
  if (image.width <= 0 || image.height <= 0) throw MediaError("empty image");
  constexpr int kRadius2 = 24 * 24;
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint8_t* px = &image.rgb[3 * p];
    int best = -1, best_d = kRadius2 + 1;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const int dr = px[0] - cs[c].rgb[0], dg = px[1] - cs[c].rgb[1], db = px[2] - cs[c].rgb[2];
      const int d = dr * dr + dg * dg + db * db;
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best >= 0) v(best) += 1.0;
  }
  v /= static_cast<double>(n);
  // Presence rather than area: a small kite matters as much as the sky.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = v(i) > 0.002 ? std::sqrt(v(i)) : 0.0;
  return v;
}

Eigen::VectorXd ConceptImageTextEncoder::embed_text(const std::string& text) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(joint_dim());
  for (const auto& tok : tokenize(text))
    if (auto c = lexicon::concept_of(to_lower(tok))) v(static_cast<Eigen::Index>(*c)) += 1.0;
  return v;
}

// --- hashing contextual encoder ---------------------------------------------

Eigen::VectorXd HashingContextualEncoder::word_vector(const std::string& lower_word) const {
  Rng rng(fnv1a(lower_word, kWordSeed));
  Eigen::VectorXd v(dim_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (int i = 0; i < dim_; ++i) v(i) = rng.normal() * scale;
  return v;
}

ContextualEncoding HashingContextualEncoder::encode(const std::string& text) {
  auto tokens = tokenize(text);
  std::vector<Eigen::VectorXd> base;
  if (tokens.empty()) {
    base.push_back(word_vector("[PAD]"));
  } else {
    for (const auto& t : tokens) base.push_back(word_vector(lemma_of(to_lower(t))));
  }
  const auto m = static_cast<Eigen::Index>(base.size());
  ContextualEncoding enc;
  enc.tokens.resize(m, dim_);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd v = 0.7 * base[static_cast<std::size_t>(i)];
    if (i > 0) v += 0.15 * base[static_cast<std::size_t>(i - 1)];
    if (i + 1 < m) v += 0.15 * base[static_cast<std::size_t>(i + 1)];
    for (int d = 0; d < dim_; ++d) {
      const double freq = std::pow(10000.0, -static_cast<double>(d - d % 2) / dim_);
      v(d) += 0.05 * (d % 2 == 0 ? std::sin(static_cast<double>(i) * freq) : std::cos(static_cast<double>(i) * freq));
    }
    enc.tokens.row(i) = v.transpose();
  }
  enc.summary = tokens.empty() ? Eigen::VectorXd::Zero(dim_) : Eigen::VectorXd(enc.tokens.colwise().mean().transpose());
  return enc;
}

// --- HTTP adapters ------------------------------------------------------------

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static const char* kTable = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += kTable[(v >> 6) & 63];
    out += kTable[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kTable[(v >> 18) & 63];
    out += kTable[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kTable[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

HttpTextEmbedder::HttpTextEmbedder(std::string endpoint, int dim) : endpoint_(std::move(endpoint)), dim_(dim) {
  parse_endpoint(endpoint_);
}

Eigen::VectorXd HttpTextEmbedder::embed(const std::string& text) {
  auto reply = post_json(endpoint_, {{"text", text}});
  if (!reply.contains("embedding")) throw EmbeddingError("embedding reply lacks 'embedding'");
  return json_vector(reply.at("embedding"), dim_, "text embedding");
}

HttpImageTextEmbedder::HttpImageTextEmbedder(std::string endpoint, int dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  parse_endpoint(endpoint_);
}

Eigen::VectorXd HttpImageTextEmbedder::embed_image(const Image& image) {
  auto reply = post_json(endpoint_, {{"image_ppm_base64", base64_encode(encode_ppm(image))}});
  if (!reply.contains("embedding")) throw EmbeddingError("embedding reply lacks 'embedding'");
  return json_vector(reply.at("embedding"), dim_, "image embedding");
}

Eigen::VectorXd HttpImageTextEmbedder::embed_text(const std::string& text) {
  auto reply = post_json(endpoint_, {{"text", text}});
  if (!reply.contains("embedding")) throw EmbeddingError("embedding reply lacks 'embedding'");
  return json_vector(reply.at("embedding"), dim_, "text embedding");
}

HttpContextualEncoder::HttpContextualEncoder(std::string endpoint, int dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  parse_endpoint(endpoint_);
}

ContextualEncoding HttpContextualEncoder::encode(const std::string& text) {
  auto reply = post_json(endpoint_, {{"text", text}});
  if (!reply.contains("cls") || !reply.contains("tokens") || !reply.at("tokens").is_array())
    throw EmbeddingError("contextual encoder reply lacks 'cls'/'tokens'");
  ContextualEncoding enc;
  enc.summary = json_vector(reply.at("cls"), dim_, "cls vector");
  const auto& toks = reply.at("tokens");
  if (toks.empty()) throw EmbeddingError("contextual encoder returned no tokens");
  enc.tokens.resize(static_cast<Eigen::Index>(toks.size()), dim_);
  for (std::size_t i = 0; i < toks.size(); ++i)
    enc.tokens.row(static_cast<Eigen::Index>(i)) = json_vector(toks[i], dim_, "token vector").transpose();
  return enc;
}

// --- similarity ------------------------------------------------------------------

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw EmbeddingError("cosine_similarity: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::optional<double> exemplar_response_similarity(TextEmbeddingBackend& backend, const std::string& exemplar_segment,
                                                   const std::string& response_segment) {
  if (trim(exemplar_segment).empty()) throw InputError("exemplar segment is empty");
  if (trim(response_segment).empty()) return std::nullopt;
  return cosine_similarity(backend.embed(exemplar_segment), backend.embed(response_segment));
}

std::optional<double> image_response_similarity(ImageTextEmbeddingBackend& backend, const Image& image,
                                                const std::string& response_segment) {
  if (trim(response_segment).empty()) return std::nullopt;
  return cosine_similarity(backend.embed_image(image), backend.embed_text(response_segment));
}

double SimilarityNormalizer::normalize(std::size_t question_index, std::optional<double> sim) const {
  if (question_index >= ranges_.size() || !ranges_[question_index].fitted)
    throw LookupError("normalizer has no fit for question index " + std::to_string(question_index));
  if (!sim) return 0.0;
  const Range& r = ranges_[question_index];
  if (r.constant) return 1.0;
  const double x = std::isfinite(*sim) ? *sim : (*sim > 0 ? r.max : r.min);
  const double unit = std::clamp((x - r.min) / (r.max - r.min), 0.0, 1.0);
  return kFloor + (1.0 - kFloor) * unit;
}

nlohmann::json SimilarityNormalizer::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : ranges_)
    arr.push_back({{"min", r.min}, {"max", r.max}, {"constant", r.constant}, {"fitted", r.fitted}});
  return {{"floor", kFloor}, {"ranges", arr}};
}

SimilarityNormalizer SimilarityNormalizer::from_json(const nlohmann::json& j) {
  std::vector<Range> ranges;
  for (const auto& r : j.at("ranges"))
    ranges.push_back({r.at("min").get<double>(), r.at("max").get<double>(), r.at("constant").get<bool>(),
                      r.at("fitted").get<bool>()});
  return SimilarityNormalizer(std::move(ranges));
}

SimilarityNormalizer fit_normalizer(const std::vector<std::vector<std::optional<double>>>& raw_sims) {
  std::vector<SimilarityNormalizer::Range> ranges(raw_sims.size());
  for (std::size_t q = 0; q < raw_sims.size(); ++q) {
    if (raw_sims[q].empty()) continue;
    bool any = false;
    double lo = 0.0, hi = 0.0;
    for (const auto& s : raw_sims[q]) {
      if (!s || !std::isfinite(*s)) continue;
      if (!any) {
        lo = hi = *s;
        any = true;
      }
      lo = std::min(lo, *s);
      hi = std::max(hi, *s);
    }
    if (!any) throw FitError("question " + std::to_string(q) + " has only no-response similarities");
    ranges[q] = {lo, hi, hi == lo, true};
  }
  return SimilarityNormalizer(std::move(ranges));
}

std::array<double, kRelevanceSlots> normalize_slots(const SimilarityNormalizer& normalizer,
                                                    const std::vector<std::optional<double>>& raw) {
  if (raw.size() > kRelevanceSlots) throw InputError("at most 4 questions per set are supported");
  std::array<double, kRelevanceSlots> out{};
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalizer.normalize(i, raw[i]);
  return out;
}

// --- question-response stream -------------------------------------------------

QuestionResponseProjector::QuestionResponseProjector(int token_dim, std::uint64_t seed) : seed_(seed) {
  const int in = 2 * token_dim;
  weights_.resize(kQuestionResponseDim, in);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (Eigen::Index r = 0; r < weights_.rows(); ++r)
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) weights_(r, c) = rng.normal() * scale;
}

Eigen::MatrixXd QuestionResponseProjector::project(const Eigen::MatrixXd& concatenated) const {
  if (concatenated.cols() != weights_.cols())
    throw ShapeError("question-response projection expects " + std::to_string(weights_.cols()) + " columns");
  return concatenated * weights_.transpose();
}

Eigen::MatrixXd question_response_concat(ContextualEncoderBackend& backend, const std::string& question,
                                         const std::string& response) {
  const ContextualEncoding q = backend.encode(question);
  const ContextualEncoding r = backend.encode(response);
  const int d = backend.token_dim();
  if (q.summary.size() != d || r.tokens.cols() != d) throw EmbeddingError("contextual encoder dimension mismatch");
  Eigen::MatrixXd out(r.tokens.rows(), 2 * d);
  out.leftCols(d) = q.summary.transpose().replicate(r.tokens.rows(), 1);
  out.rightCols(d) = r.tokens;
  return out;
}

Eigen::MatrixXd question_response_features(ContextualEncoderBackend& backend,
                                           const QuestionResponseProjector& projector, const std::string& question,
                                           const std::string& response) {
  return projector.project(question_response_concat(backend, question, response));
}

}  // namespace asa
