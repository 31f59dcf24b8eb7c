#include <sstream>

#include <gtest/gtest.h>

#include "asa/traineval.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

namespace asa {
namespace {

TEST(Metrics, AccuracyAndBinaryAccuracy) {
  EXPECT_DOUBLE_EQ(accuracy({3, 4, 5, 2}, {4, 4, 5, 1}), 0.5);
  EXPECT_DOUBLE_EQ(binary_accuracy({3, 4, 5, 2}, {4, 4, 5, 1}), 0.75);
  EXPECT_THROW(accuracy({}, {}), InputError);
  EXPECT_THROW(accuracy({1}, {1, 2}), InputError);
  EXPECT_THROW(binary_accuracy({0}, {1}), InputError);
}

TEST(Metrics, BinaryNeverBelowExactProperty) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> p(1 + rng.uniform_int(20)), g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = 1 + static_cast<int>(rng.uniform_int(5));
      g[i] = 1 + static_cast<int>(rng.uniform_int(5));
    }
    EXPECT_GE(binary_accuracy(p, g), accuracy(p, g));
  }
}

TEST(Metrics, WordErrorRate) {
  EXPECT_NEAR(word_error_rate({"the", "dog", "runs"}, {"the", "dog", "ran"}), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(word_error_rate({"a"}, {"b", "c", "d"}), 3.0);
  EXPECT_DOUBLE_EQ(word_error_rate({"a", "b"}, {"a", "b"}), 0.0);
  EXPECT_THROW(word_error_rate({}, {"a"}), InputError);
}

TEST(Metrics, EditDistanceMatchesBruteForceProperty) {
  Rng rng(4);
  const std::vector<std::string> alphabet = {"x", "y", "z"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> a(rng.uniform_int(9)), b(rng.uniform_int(9));
    for (auto& t : a) t = alphabet[rng.uniform_int(3)];
    for (auto& t : b) t = alphabet[rng.uniform_int(3)];
    EXPECT_EQ(token_edit_distance(a, b), test::brute_levenshtein(a, b));
  }
}

TEST(Optimizer, FirstStepMovesByLearningRate) {
  std::vector<ag::Parameter> params(2);
  params[0].value = Eigen::MatrixXd::Constant(1, 2, 1.0);
  params[0].grad = (Eigen::MatrixXd(1, 2) << 0.3, -5.0).finished();
  params[1].value = Eigen::MatrixXd::Constant(2, 2, 1.0);
  params[1].grad = Eigen::MatrixXd::Zero(2, 2);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  AdamW opt(params, cfg);
  opt.step(params);
  // Bias-corrected first step is lr * sign(g); rows are exempt from decay.
  EXPECT_NEAR(params[0].value(0, 0), 0.9, 1e-6);
  EXPECT_NEAR(params[0].value(0, 1), 1.1, 1e-6);
  EXPECT_NEAR(params[1].value(0, 0), 1.0 - 0.1 * 0.5, 1e-12);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Optimizer, GlobalNormClipScalesGradients) {
  std::vector<ag::Parameter> a(1), b(1);
  a[0].value = b[0].value = Eigen::MatrixXd::Zero(1, 1);
  a[0].grad = Eigen::MatrixXd::Constant(1, 1, 10.0);
  b[0].grad = Eigen::MatrixXd::Constant(1, 1, 10.0);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.grad_clip = 1.0;
  AdamW clipped(a, cfg);
  clipped.step(a);
  cfg.grad_clip = 0.0;
  AdamW plain(b, cfg);
  plain.step(b);
  // Adam is scale invariant on the first step, so the clip shows up only
  // through epsilon.
  EXPECT_NEAR(a[0].value(0, 0), b[0].value(0, 0), 1e-6);
  EXPECT_LT(a[0].value(0, 0), 0.0);
}

TEST(TrainConfig, JsonAndValidation) {
  TrainConfig c;
  c.epochs = 3;
  c.target = ScoreTarget::kRelevance;
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
  try {
    TrainConfig::from_json({{"epoch", 3}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos);
  }
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

class TinyData : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(13);
    for (int i = 0; i < 10; ++i) bundles.push_back(test::random_bundle(rng, 3, 3, 3));
    for (int i = 0; i < 10; ++i) {
      LabeledExample ex{"r" + std::to_string(i), &bundles[static_cast<std::size_t>(i)], 1 + i % 5};
      (i < 8 ? train_set : dev_set).push_back(ex);
    }
  }
  std::vector<FeatureBundle> bundles;
  std::vector<LabeledExample> train_set, dev_set;
};

TEST_F(TinyData, ZeroEpochsReturnsInitialModel) {
  const ScoringModel init(test::tiny_config());
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train(init, train_set, dev_set, cfg, 1);
  EXPECT_TRUE(r.log.empty());
  for (std::size_t i = 0; i < init.parameters().size(); ++i)
    EXPECT_EQ(r.best_model.parameters()[i].value, init.parameters()[i].value);
}

TEST_F(TinyData, OverfitsRandomLabels) {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 4;
  cfg.learning_rate = 3e-3;
  cfg.stop_at_perfect_train = true;
  const auto r = train(ScoringModel(test::tiny_config()), train_set, dev_set, cfg, 1);
  ASSERT_FALSE(r.log.empty());
  EXPECT_EQ(r.log.back().train_accuracy, 1.0);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
}

TEST_F(TinyData, SameSeedSameCurvesAndJsonl) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.learning_rate = 1e-3;
  auto model_cfg = test::tiny_config();
  model_cfg.dropout = 0.2;
  std::ostringstream la, lb;
  const auto a = train(ScoringModel(model_cfg), train_set, dev_set, cfg, 7, &la);
  const auto b = train(ScoringModel(model_cfg), train_set, dev_set, cfg, 7, &lb);
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
  EXPECT_EQ(la.str(), lb.str());
  std::istringstream lines(la.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) EXPECT_EQ(nlohmann::json::parse(line).at("epoch"), ++n);
  EXPECT_EQ(n, 3);
}

TEST_F(TinyData, BestEpochIsTheFirstWithMaximalDevAccuracy) {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  const auto r = train(ScoringModel(test::tiny_config()), train_set, dev_set, cfg, 3);
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& e : r.log)
    if (e.dev_accuracy > best) best = e.dev_accuracy, best_epoch = e.epoch;
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.best_dev_accuracy, best);
  const auto rep = evaluate(r.best_model, dev_set, "dev", "holistic");
  EXPECT_EQ(rep.accuracy, best);
}

TEST_F(TinyData, EvaluateReportContents) {
  const ScoringModel model(test::tiny_config());
  const auto r = evaluate(model, dev_set, "dev", "holistic");
  EXPECT_EQ(r.n, 2u);
  int total = 0;
  for (const auto& row : r.confusion)
    for (int c : row) total += c;
  EXPECT_EQ(total, 2);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("predictions").size(), 2u);
  EXPECT_NE(r.to_table().find("Bin Acc."), std::string::npos);
  EXPECT_THROW(evaluate(model, {}, "dev", "holistic"), InputError);
  EXPECT_EQ(evaluate(model, dev_set, "dev", "holistic").to_json(), j);
}

TEST(Ablation, TableHasOneRowPerCellAndRecordsFailures) {
  const nlohmann::json base = {{"features", {{"use_grammar", true}}}, {"seed", 1}};
  nlohmann::json off = base;
  off["features"]["use_grammar"] = false;
  const std::vector<AblationCell> grid = {{"full", base}, {"w/o Grammar", off}, {"broken", base}};
  const auto rows = run_ablation(grid, [](const AblationCell& cell) {
    if (cell.name == "broken") throw FitError("no data");
    EvalReport r;
    r.split = "dev";
    r.n = 1;
    r.accuracy = cell.config.at("features").at("use_grammar").get<bool>() ? 1.0 : 0.5;
    r.binary_accuracy = 1.0;
    return std::map<std::string, EvalReport>{{"dev", r}};
  });
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_TRUE(rows[0].config_diff.empty());
  EXPECT_EQ(rows[1].config_diff, (nlohmann::json{{"features.use_grammar", {{"base", true}, {"cell", false}}}}));
  EXPECT_FALSE(rows[2].ok);
  EXPECT_NE(rows[2].error.find("no data"), std::string::npos);
  const auto table = ablation_table(rows, {"dev"});
  EXPECT_NE(table.find("1.000 / 1.000"), std::string::npos);
  EXPECT_NE(table.find("0.500 / 1.000"), std::string::npos);
  EXPECT_NE(table.find("FAILED"), std::string::npos);
}

TEST(Ablation, ConfigDiffFlattensNestedKeys) {
  const nlohmann::json a = {{"x", 1}, {"s", {{"k", "a"}, {"m", {1, 2}}}}};
  const nlohmann::json b = {{"x", 1}, {"s", {{"k", "b"}, {"m", {1, 2}}}}, {"extra", true}};
  const auto d = config_diff(a, b);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at("s.k").at("cell"), "b");
  EXPECT_TRUE(d.at("extra").at("base").is_null());
}

}  // namespace
}  // namespace asa
