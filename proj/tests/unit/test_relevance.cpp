#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "asa/common.hpp"
#include "asa/lexicon.hpp"
#include "asa/relevance.hpp"
#include "json_server.hpp"

namespace asa {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

class TableText : public TextEmbeddingBackend {
 public:
  std::map<std::string, Eigen::VectorXd> table;
  Eigen::VectorXd embed(const std::string& text) override { return table.at(text); }
  int embedding_dim() const override { return 2; }
};

class FixedImageText : public ImageTextEmbeddingBackend {
 public:
  Eigen::VectorXd image_vec, text_vec;
  Eigen::VectorXd embed_image(const Image&) override { return image_vec; }
  Eigen::VectorXd embed_text(const std::string&) override { return text_vec; }
  int joint_dim() const override { return static_cast<int>(image_vec.size()); }
};

class TableContextual : public ContextualEncoderBackend {
 public:
  ContextualEncoding encode(const std::string& text) override {
    ContextualEncoding e;
    const double base = static_cast<double>(text.size());
    e.summary = vec({base, -base});
    const auto toks = tokenize(text);
    e.tokens.resize(std::max<Eigen::Index>(1, static_cast<Eigen::Index>(toks.size())), 2);
    for (Eigen::Index i = 0; i < e.tokens.rows(); ++i) e.tokens.row(i) << static_cast<double>(i), 10.0 + static_cast<double>(i);
    return e;
  }
  int token_dim() const override { return 2; }
};

TEST(Similarity, IdenticalStringsGiveOne) {
  HashingSentenceEncoder enc;
  const auto s = exemplar_response_similarity(enc, "The dog runs in the park.", "The dog runs in the park.");
  ASSERT_TRUE(s);
  EXPECT_NEAR(*s, 1.0, 1e-6);
}

TEST(Similarity, StubCosines) {
  TableText t;
  t.table = {{"x", vec({1, 0})}, {"y", vec({0, 1})}, {"z", vec({1, 1})}};
  EXPECT_NEAR(*exemplar_response_similarity(t, "x", "y"), 0.0, 1e-12);
  EXPECT_NEAR(*exemplar_response_similarity(t, "z", "x"), 0.7071, 1e-4);
  EXPECT_FALSE(exemplar_response_similarity(t, "x", "").has_value());
}

TEST(Similarity, ImageStubCosines) {
  FixedImageText f;
  Image img{1, 1, {0, 0, 0}};
  f.image_vec = vec({3, 4});
  f.text_vec = vec({4, 3});
  EXPECT_NEAR(*image_response_similarity(f, img, "text"), 0.96, 1e-6);
  f.text_vec = vec({3, 4});
  EXPECT_NEAR(*image_response_similarity(f, img, "text"), 1.0, 1e-12);
  f.text_vec = vec({-3, -4});
  EXPECT_NEAR(*image_response_similarity(f, img, "text"), -1.0, 1e-12);
  EXPECT_FALSE(image_response_similarity(f, img, "").has_value());
}

TEST(Similarity, CosineSymmetryProperty) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd a(8), b(8);
    for (int k = 0; k < 8; ++k) a(k) = rng.normal(), b(k) = rng.normal();
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(b, a), 1e-9);
  }
  EXPECT_EQ(cosine_similarity(Eigen::VectorXd::Zero(3), vec({1, 2, 3})), 0.0);
}

TEST(Similarity, UndecodableImageIsMediaError) {
  EXPECT_THROW(decode_image({'n', 'o', 'p', 'e'}), MediaError);
}

TEST(ConceptEncoder, ImageMatchesNamedConcept) {
  ConceptImageTextEncoder enc;
  const auto& cs = lexicon::concepts();
  Image img{4, 4, std::vector<std::uint8_t>(48)};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) std::copy(cs[0].rgb.begin(), cs[0].rgb.end(), img.at(x, y));
  const std::string named = cs[0].keywords.front();
  const std::string other = cs[3].keywords.front();
  EXPECT_GT(*image_response_similarity(enc, img, "I see a " + named), 0.9);
  EXPECT_NEAR(*image_response_similarity(enc, img, "I see a " + other), 0.0, 1e-12);
}

TEST(Normalizer, FitExamples) {
  const auto n = fit_normalizer({{0.2, 0.5, 0.8}, {0.4, 0.4}, {std::nullopt, 0.1, 0.3}});
  ASSERT_EQ(n.ranges().size(), 3u);
  EXPECT_DOUBLE_EQ(n.ranges()[0].min, 0.2);
  EXPECT_DOUBLE_EQ(n.ranges()[0].max, 0.8);
  EXPECT_TRUE(n.ranges()[1].constant);
  EXPECT_DOUBLE_EQ(n.ranges()[2].min, 0.1);
  EXPECT_DOUBLE_EQ(n.ranges()[2].max, 0.3);
  EXPECT_THROW(fit_normalizer({{std::nullopt, std::nullopt}}), FitError);
}

TEST(Normalizer, FormulaEndpointsAndSentinel) {
  const auto n = fit_normalizer({{0.2, 0.8}, {0.4, 0.4}});
  EXPECT_DOUBLE_EQ(n.normalize(0, 0.2), 0.01);
  EXPECT_DOUBLE_EQ(n.normalize(0, 0.8), 1.0);
  EXPECT_NEAR(n.normalize(0, 0.5), 0.505, 1e-9);
  EXPECT_DOUBLE_EQ(n.normalize(0, -5.0), 0.01);
  EXPECT_DOUBLE_EQ(n.normalize(0, 5.0), 1.0);
  EXPECT_EQ(n.normalize(0, std::nullopt), 0.0);
  EXPECT_EQ(n.normalize(1, -0.3), 1.0);
  EXPECT_THROW(n.normalize(2, 0.5), LookupError);
  EXPECT_EQ(SimilarityNormalizer::from_json(n.to_json()), n);
}

TEST(Normalizer, RangeAndMonotonicityProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::optional<double>> sims;
    for (int i = 0; i < 5; ++i) sims.push_back(2.0 * rng.uniform() - 1.0);
    const auto n = fit_normalizer({sims});
    double prev_x = -2.0, prev_y = -1.0;
    std::vector<double> xs;
    for (int i = 0; i < 200; ++i) xs.push_back(4.0 * rng.uniform() - 2.0);
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      const double y = n.normalize(0, x);
      EXPECT_TRUE(y >= 0.01 && y <= 1.0) << y;
      if (x >= prev_x) EXPECT_GE(y, prev_y);
      prev_x = x;
      prev_y = y;
    }
  }
}

TEST(Slots, PadsToFourAndRejectsFive) {
  const auto n = fit_normalizer({{0.0, 1.0}, {0.0, 1.0}});
  const auto s = normalize_slots(n, {0.5, std::nullopt});
  EXPECT_NEAR(s[0], 0.505, 1e-12);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[2], 0.0);
  EXPECT_EQ(s[3], 0.0);
  EXPECT_THROW(normalize_slots(n, {1, 1, 1, 1, 1}), InputError);
}

TEST(QuestionResponse, LengthMatchesTokensAndDimIs256) {
  HashingContextualEncoder enc;
  const QuestionResponseProjector proj(enc.token_dim(), 1);
  const std::string response = "The dog runs to the ball .";
  const auto f = question_response_features(enc, proj, "What is the dog doing?", response);
  EXPECT_EQ(f.rows(), 7);
  EXPECT_EQ(f.cols(), kQuestionResponseDim);
  EXPECT_EQ(f.rows(), enc.encode(response).tokens.rows());
  EXPECT_EQ(question_response_features(enc, proj, "Q?", "").rows(), 1);
}

TEST(QuestionResponse, QuestionsDifferOnlyInSummaryHalf) {
  HashingContextualEncoder enc;
  const auto a = question_response_concat(enc, "What is the dog doing?", "The dog runs.");
  const auto b = question_response_concat(enc, "Where is the car?", "The dog runs.");
  const auto d = enc.token_dim();
  EXPECT_EQ(a.rightCols(d), b.rightCols(d));
  EXPECT_GT((a.leftCols(d) - b.leftCols(d)).norm(), 0.0);
}

TEST(QuestionResponse, StubConcatenationElementwise) {
  TableContextual enc;
  const auto m = question_response_concat(enc, "abc", "x y");
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 4);
  const Eigen::MatrixXd expected = (Eigen::MatrixXd(2, 4) << 3, -3, 0, 10, 3, -3, 1, 11).finished();
  EXPECT_EQ(m, expected);
}

TEST(QuestionResponse, ProjectionIsSeededAndFixed) {
  const QuestionResponseProjector a(4, 9), b(4, 9), c(4, 10);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 8);
  EXPECT_EQ(a.project(x), b.project(x));
  EXPECT_NE(a.project(x), c.project(x));
  EXPECT_THROW(a.project(Eigen::MatrixXd::Ones(2, 5)), ShapeError);
}

TEST(HttpBackends, TextEmbedderRoundTrip) {
  test::JsonServer server([](const nlohmann::json& body) {
    const auto text = body.at("text").get<std::string>();
    return nlohmann::json{{"embedding", {static_cast<double>(text.size()), 1.0}}};
  });
  HttpTextEmbedder e(server.url("/embed"), 2);
  EXPECT_EQ(e.embed("abcd"), vec({4, 1}));
  HttpTextEmbedder wrong(server.url("/embed"), 3);
  EXPECT_THROW(wrong.embed("abcd"), EmbeddingError);
}

TEST(HttpBackends, ImageAndContextualProtocols) {
  test::JsonServer server([](const nlohmann::json& body) {
    if (body.contains("image_ppm_base64")) return nlohmann::json{{"embedding", {1.0, 0.0}}};
    if (body.contains("text") && body.at("text") == "tokens")
      return nlohmann::json{{"cls", {0.5, 0.5}}, {"tokens", {{1.0, 2.0}, {3.0, 4.0}}}};
    return nlohmann::json{{"embedding", {0.0, 1.0}}};
  });
  HttpImageTextEmbedder it(server.url("/clip"), 2);
  Image img{1, 1, {1, 2, 3}};
  EXPECT_NEAR(*image_response_similarity(it, img, "hello"), 0.0, 1e-12);
  HttpContextualEncoder ce(server.url("/bert"), 2);
  const auto enc = ce.encode("tokens");
  EXPECT_EQ(enc.tokens.rows(), 2);
  EXPECT_EQ(enc.summary, vec({0.5, 0.5}));
}

TEST(HttpBackends, Base64KnownVectors) {
  EXPECT_EQ(base64_encode({'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(base64_encode({'M', 'a'}), "TWE=");
  EXPECT_EQ(base64_encode({'M'}), "TQ==");
}

}  // namespace
}  // namespace asa
