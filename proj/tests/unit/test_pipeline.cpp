#include <fstream>

#include <gtest/gtest.h>

#include "asa/pipeline.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

namespace asa {
namespace {

PipelineConfig small_config(const std::filesystem::path& root) {
  PipelineConfig cfg;
  SyntheticOptions opt;
  cfg.manifest = generate_synthetic_corpus(root / "corpus", opt);
  cfg.output_dir = root / "out";
  cfg.split.unknown_set = "set-03";
  cfg.extract.workers = 1;
  cfg.model = test::tiny_config();
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  cfg.train.learning_rate = 1e-3;
  return cfg;
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    PipelineConfig::from_json({{"relevance", {{"txt_backend", "hashing"}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("relevance.txt_backend"), std::string::npos) << e.what();
  }
  EXPECT_THROW(PipelineConfig::from_json({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json({{"features", {{"use_grammar", "yes"}}}}), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig c;
  c.seed = 9;
  c.features.use_er = false;
  c.splitter.backend = "llm";
  c.splitter.endpoint = "http://127.0.0.1:9/generate";
  EXPECT_EQ(PipelineConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Config, EnvironmentOverrides) {
  const auto j = apply_env_overrides({{"train", {{"epochs", 5}}}},
                                     {"ASA__SEED=7", "ASA__TRAIN__EPOCHS=3", "ASA__splitter__backend=llm", "PATH=/bin"});
  EXPECT_EQ(j.at("seed"), 7);
  EXPECT_EQ(j.at("train").at("epochs"), 3);
  EXPECT_EQ(j.at("splitter").at("backend"), "llm");
  EXPECT_FALSE(j.contains("path"));
}

TEST(Config, ValidationCatchesBadValues) {
  PipelineConfig c;
  c.splitter.backend = "gpt";
  EXPECT_THROW(c.validate(false), ConfigError);
  c = PipelineConfig{};
  c.splitter.backend = "llm";
  EXPECT_THROW(c.validate(false), ConfigError);
  c = PipelineConfig{};
  c.manifest = "/nonexistent/manifest.jsonl";
  EXPECT_THROW(c.validate(true), ConfigError);
  c = PipelineConfig{};
  EXPECT_THROW(make_backends([] {
                 PipelineConfig x;
                 x.relevance.text_backend = "sbert";
                 return x;
               }()),
               ConfigError);
}

TEST(AblationGrid, EachCellDiffersByExactlyItsToggle) {
  PipelineConfig base;
  const auto grid = standard_ablation_grid(base);
  const std::map<std::string, std::string> expected = {{"w/o normalized", "features.grammar_normalized"},
                                                       {"only exemplar-response", "features.use_ir"},
                                                       {"only image-response", "features.use_er"},
                                                       {"w/o response-splitting", "features.splitting"},
                                                       {"w/o Grammar", "features.use_grammar"},
                                                       {"w/o Multifaceted", "features.multifaceted"}};
  ASSERT_EQ(grid.size(), expected.size() + 1);
  EXPECT_TRUE(config_diff(grid[0].config, base.to_json()).empty());
  std::set<std::string> names;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_TRUE(names.insert(grid[i].name).second);
    const auto d = config_diff(grid[0].config, grid[i].config);
    ASSERT_EQ(d.size(), 1u) << grid[i].name;
    EXPECT_EQ(d.begin().key(), expected.at(grid[i].name));
    EXPECT_EQ(d.begin().value().at("cell"), false);
  }
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir();
    cfg_ = new PipelineConfig(small_config(dir_->path()));
    first_ = new ExtractSummary(extract_features(*cfg_));
  }
  static void TearDownTestSuite() {
    delete first_;
    delete cfg_;
    delete dir_;
  }
  static test::TempDir* dir_;
  static PipelineConfig* cfg_;
  static ExtractSummary* first_;
};
test::TempDir* PipelineTest::dir_ = nullptr;
PipelineConfig* PipelineTest::cfg_ = nullptr;
ExtractSummary* PipelineTest::first_ = nullptr;

TEST_F(PipelineTest, ExtractWritesEveryBundle) {
  EXPECT_EQ(first_->total, 40u);
  EXPECT_EQ(first_->computed, 40u);
  EXPECT_TRUE(first_->failures.empty());
  const FeatureStore store(cfg_->features_dir());
  const auto schemas = store.load_schemas();
  const auto split = split_from_json(schemas.at("split"));
  EXPECT_EQ(split.unknown_test.size(), 10u);
  for (const auto& id : split.train) {
    ASSERT_TRUE(store.has_bundle(id)) << id;
    const auto b = store.load_bundle(id, cfg_->features);
    EXPECT_EQ(b.qr_seq.cols(), 256);
    EXPECT_EQ(b.syntax_seq.cols(), 247);
    EXPECT_EQ(b.delivery_seq.cols(), 14);
    EXPECT_EQ(b.grammar.size(), 265);
    EXPECT_EQ(b.s_er.size(), 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
      EXPECT_TRUE(b.s_er(k) == 0.0 || (b.s_er(k) >= 0.01 && b.s_er(k) <= 1.0));
      EXPECT_TRUE(b.s_ir(k) == 0.0 || (b.s_ir(k) >= 0.01 && b.s_ir(k) <= 1.0));
    }
  }
}

TEST_F(PipelineTest, RerunReusesCache) {
  const auto again = extract_features(*cfg_);
  EXPECT_EQ(again.computed, 0u);
  EXPECT_EQ(again.cached, 40u);
}

TEST_F(PipelineTest, UnknownSplitNameIsInputError) {
  const FeatureStore store(cfg_->features_dir());
  const auto split = split_from_json(store.load_schemas().at("split"));
  EXPECT_THROW(load_split_examples(store, split, "validation", ScoreTarget::kHolistic, cfg_->features), InputError);
  const auto rel = load_split_examples(store, split, "train", ScoreTarget::kRelevance, cfg_->features);
  EXPECT_EQ(rel.examples.size(), 24u);
}

TEST_F(PipelineTest, TrainEvalIsReproducibleAndChecksCompatibility) {
  const auto t = train_command(*cfg_);
  EXPECT_TRUE(std::filesystem::exists(t.checkpoint));
  EXPECT_EQ(t.n_train, 24u);
  EXPECT_EQ(t.n_dev, 3u);
  const auto a = eval_command(*cfg_, t.checkpoint, "unknown_test");
  const auto b = eval_command(*cfg_, t.checkpoint, "unknown_test");
  EXPECT_EQ(a.n, 10u);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_TRUE(std::filesystem::exists(cfg_->output_dir / "reports" / "unknown_test.json"));

  auto loaded = load_checkpoint(t.checkpoint);
  loaded.metadata["fingerprints"]["taxonomy"] = "0000000000000000";
  const auto tampered = dir_->path() / "tampered.ckpt";
  save_checkpoint(tampered, loaded.model, loaded.metadata);
  try {
    eval_command(*cfg_, tampered, "unknown_test");
    FAIL();
  } catch (const CompatibilityError& e) {
    EXPECT_NE(std::string(e.what()).find("taxonomy"), std::string::npos) << e.what();
  }
}

TEST(PipelineFailures, MissingImageIsRecordedPerResponse) {
  test::TempDir dir;
  auto cfg = small_config(dir.path());
  const auto corpus = load_manifest(cfg.manifest);
  std::filesystem::remove(corpus.resolve(corpus.question_sets.back().image_ref));
  const auto s = extract_features(cfg);
  EXPECT_EQ(s.failures.size(), 10u);
  for (const auto& f : s.failures) EXPECT_EQ(f.kind, "MediaError");
  const auto report = nlohmann::json::parse(std::ifstream(cfg.features_dir() / "extract_report.json"));
  EXPECT_EQ(report.at("failures").size(), 10u);

  // With the image stream off the same corpus extracts cleanly.
  cfg.features.use_ir = false;
  cfg.output_dir = dir.path() / "out2";
  EXPECT_TRUE(extract_features(cfg).failures.empty());
}

TEST(PipelineFailures, NoTrainingDataIsInsufficientData) {
  test::TempDir dir;
  auto cfg = small_config(dir.path());
  cfg.split.ratios = SplitRatios{0.0, 0.5, 0.5};
  EXPECT_THROW(extract_features(cfg), InsufficientDataError);
}

}  // namespace
}  // namespace asa
