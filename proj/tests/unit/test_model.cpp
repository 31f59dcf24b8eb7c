#include <cmath>

#include <gtest/gtest.h>

#include "asa/model.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

namespace asa {
namespace {

TEST(Model, FullSizeShapesForLengths1To64) {
  ModelConfig cfg;
  cfg.seed = 3;
  const ScoringModel model(cfg);
  Rng rng(5);
  for (int len : {1, 2, 7, 33, 64}) {
    const auto b = test::random_bundle(rng, len, len, len);
    const auto pred = model.predict(b);
    ASSERT_EQ(pred.logits.size(), kNumClasses);
    EXPECT_TRUE(pred.logits.allFinite());
    EXPECT_GE(pred.score, 1);
    EXPECT_LE(pred.score, 5);
  }
}

TEST(Model, TinyShapesForEveryLength) {
  const ScoringModel model(test::tiny_config());
  Rng rng(6);
  for (int len = 1; len <= 64; ++len) {
    const auto b = test::random_bundle(rng, len, 1 + (len * 7) % 64, 1 + (len * 13) % 64);
    const auto pred = model.predict(b);
    ASSERT_EQ(pred.logits.size(), kNumClasses) << len;
    EXPECT_TRUE(pred.logits.allFinite()) << len;
  }
}

TEST(Model, WrongWidthIsShapeError) {
  const ScoringModel model(test::tiny_config());
  Rng rng(1);
  auto b = test::random_bundle(rng, 3, 3, 3);
  b.syntax_seq = Eigen::MatrixXd::Zero(3, 246);
  EXPECT_THROW(model.predict(b), ShapeError);
  b = test::random_bundle(rng, 3, 3, 3);
  b.s_er = Eigen::VectorXd::Zero(5);
  EXPECT_THROW(model.predict(b), ShapeError);
  b = test::random_bundle(rng, 3, 3, 3);
  b.qr_seq.resize(0, kQrDim);
  EXPECT_THROW(model.predict(b), ShapeError);
}

TEST(Model, NonFiniteInputIsNumericError) {
  const ScoringModel model(test::tiny_config());
  Rng rng(1);
  auto b = test::random_bundle(rng, 3, 3, 3);
  b.grammar(0) = std::nan("");
  EXPECT_THROW(model.predict(b), NumericError);
}

TEST(Model, GradientMatchesCentralDifferences) {
  ScoringModel model(test::tiny_config(4));
  Rng rng(9);
  const auto b = test::random_bundle(rng, 3, 2, 4);
  const auto r = test::gradient_check(model, b, 4);
  EXPECT_LE(r.worst_relative_error, 1e-4) << r.worst_param;
  EXPECT_EQ(r.entries_checked, model.parameter_count());
  EXPECT_TRUE(r.unexpected_zero.empty()) << r.unexpected_zero.front();
}

TEST(Model, PaddingRowsDoNotChangeOutput) {
  const ScoringModel model(test::tiny_config(2));
  Rng rng(3);
  const auto b = test::random_bundle(rng, 5, 4, 6);
  auto padded = b;
  padded.qr_seq.conservativeResize(9, Eigen::NoChange);
  padded.qr_seq.bottomRows(4).setConstant(7.0);
  padded.syntax_seq.conservativeResize(8, Eigen::NoChange);
  padded.syntax_seq.bottomRows(4).setConstant(-3.0);
  padded.delivery_seq.conservativeResize(10, Eigen::NoChange);
  padded.delivery_seq.bottomRows(4).setConstant(2.0);
  padded.qr_len = 5;
  padded.syntax_len = 4;
  padded.delivery_len = 6;
  const auto a = model.predict(b).logits;
  const auto p = model.predict(padded).logits;
  EXPECT_LE((a - p).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Model, SameSeedSameWeights) {
  const ScoringModel a(test::tiny_config(11)), b(test::tiny_config(11)), c(test::tiny_config(12));
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value) << a.parameters()[i].name;
    if (a.parameters()[i].value != c.parameters()[i].value) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Model, FixedProjectionIsAffine) {
  const ScoringModel model(test::tiny_config(5));
  Rng rng(2);
  const Eigen::VectorXd x = test::random_matrix(rng, kGrammarStreamDim, 1);
  const Eigen::VectorXd y = test::random_matrix(rng, kGrammarStreamDim, 1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(kGrammarStreamDim);
  const auto f = [&](const Eigen::VectorXd& v) { return model.project_fixed_stream(FixedStream::kGrammar, v); };
  const Eigen::RowVectorXd lhs = f(x + y) - f(zero);
  const Eigen::RowVectorXd rhs = (f(x) - f(zero)) + (f(y) - f(zero));
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(f(x).size(), 8);
}

TEST(Model, SequenceEncoderKeepsLength) {
  const ScoringModel model(test::tiny_config());
  Rng rng(4);
  const auto out = model.encode_sequence_stream(SequenceStream::kSyntax, test::random_matrix(rng, 6, kSyntaxDim));
  EXPECT_EQ(out.rows(), 6);
  EXPECT_EQ(out.cols(), 8);
}

TEST(Model, CrossAttentionIgnoresMaskedSourceRows) {
  const ScoringModel model(test::tiny_config());
  Rng rng(8);
  const Eigen::MatrixXd target = test::random_matrix(rng, 3, 8);
  Eigen::MatrixXd source = test::random_matrix(rng, 4, 8);
  Eigen::VectorXd valid(4);
  valid << 1, 1, 0, 0;
  const auto a = model.cross_aspect_attention(0, target, source, valid);
  source.bottomRows(2).setConstant(100.0);
  const auto b = model.cross_aspect_attention(0, target, source, valid);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model, ConfigValidationAndJson) {
  ModelConfig c = test::tiny_config();
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(ModelConfig::from_json({{"hidden_size", 4}}), ConfigError);
  c = test::tiny_config();
  c.cross_pairs.push_back({Aspect::kContent, Aspect::kContent});
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Model, RegressionHeadPredictsInRange) {
  auto cfg = test::tiny_config();
  cfg.head = HeadKind::kRegression;
  ScoringModel model(cfg);
  Rng rng(2);
  const auto b = test::random_bundle(rng, 2, 2, 2);
  const auto p = model.predict(b);
  EXPECT_EQ(p.logits.size(), 0);
  EXPECT_GE(p.score, 1);
  EXPECT_LE(p.score, 5);
  EXPECT_TRUE(std::isfinite(model.loss(b, 3)));
}

TEST(Checkpoint, RoundTripGivesIdenticalPredictions) {
  test::TempDir dir;
  ScoringModel model(test::tiny_config(7));
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Constant(kSpeechDim, 0.5);
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Constant(kSpeechDim, 2.0);
  model.set_delivery_standardization(mean, scale);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, model, {{"target", "holistic"}});
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.metadata.at("target"), "holistic");
  EXPECT_EQ(loaded.model.config(), model.config());
  EXPECT_EQ(loaded.model.delivery_scale(), scale);
  Rng rng(1);
  const auto b = test::random_bundle(rng, 4, 4, 4);
  EXPECT_EQ(loaded.model.predict(b).logits, model.predict(b).logits);
}

TEST(Checkpoint, ForeignOrMissingFiles) {
  test::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir.path() / "absent.ckpt"), IoError);
  test::write_all(dir.path() / "bad.ckpt", "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint(dir.path() / "bad.ckpt"), CompatibilityError);
}

TEST(Im2col, WindowsWithZeroEdges) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const auto m = im2col(x, 3, 2);
  Eigen::MatrixXd expected(3, 3);
  expected << 0, 1, 2, 1, 2, 0, 2, 0, 0;
  EXPECT_EQ(m, expected);
}

}  // namespace
}  // namespace asa
