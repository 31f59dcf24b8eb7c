// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "asa/delivery.hpp"
#include "asa/grammar.hpp"
#include "asa/pipeline.hpp"
#include "asa/relevance.hpp"
#include "asa/traineval.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

namespace {

using namespace asa;
using Clock = std::chrono::steady_clock;

// Pinned limits.
constexpr double kNormalizeSeconds = 5.0;
constexpr int kNormalizeSamples = 10000;
constexpr int kAlignmentPairs = 1000;
constexpr double kAlignmentSeconds = 30.0;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 120.0;
constexpr int kOverfitEpochs = 200;
constexpr double kOverfitSeconds = 600.0;
constexpr double kPitchTolHz = 5.0;
constexpr double kPauseTolS = 0.02;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// --- 1 ---------------------------------------------------------------------------

Outcome normalization_contract() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::vector<std::optional<double>> fit;
  for (int i = 0; i < 50; ++i) fit.push_back(rng.uniform() * 1.6 - 0.8);
  fit.push_back(std::nullopt);
  const auto norm = fit_normalizer({fit});

  std::vector<double> xs;
  std::size_t bad_range = 0;
  for (int i = 0; i < kNormalizeSamples; ++i) {
    const double x = rng.uniform() * 4.0 - 2.0;
    xs.push_back(x);
    const double y = norm.normalize(0, x);
    if (!(y == 0.0 || (y >= 0.01 && y <= 1.0))) ++bad_range;
  }
  const bool sentinel = norm.normalize(0, std::nullopt) == 0.0;
  std::sort(xs.begin(), xs.end());
  std::size_t bad_order = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (norm.normalize(0, xs[i]) < norm.normalize(0, xs[i - 1])) ++bad_order;
  const double secs = seconds_since(t0);
  return {bad_range == 0 && sentinel && bad_order == 0 && secs < kNormalizeSeconds,
          "out-of-range=" + std::to_string(bad_range) + " no-response->0=" + (sentinel ? "yes" : "no") +
              " order-violations=" + std::to_string(bad_order) + " time=" + fmt(secs, 3) + "s"};
}

// --- 2 ---------------------------------------------------------------------------

Outcome alignment_oracle() {
  const auto t0 = Clock::now();
  const std::vector<std::string> alphabet = {"the", "a", "dog", "dogs", "run", "runs", "in", "park"};
  Rng rng(202);
  std::size_t cost_mismatch = 0, wer_mismatch = 0, wer_checked = 0;
  for (int i = 0; i < kAlignmentPairs; ++i) {
    std::vector<std::string> x(rng.uniform_int(9)), y(rng.uniform_int(9));
    for (auto& t : x) t = alphabet[rng.uniform_int(alphabet.size())];
    for (auto& t : y) t = alphabet[rng.uniform_int(alphabet.size())];
    const std::size_t oracle = test::brute_levenshtein(x, y);
    if (total_cost(align_edits(x, y)) != oracle) ++cost_mismatch;
    if (!x.empty()) {
      ++wer_checked;
      if (word_error_rate(x, y) != static_cast<double>(oracle) / static_cast<double>(x.size())) ++wer_mismatch;
    }
  }
  const double secs = seconds_since(t0);
  return {cost_mismatch == 0 && wer_mismatch == 0 && secs < kAlignmentSeconds,
          std::to_string(kAlignmentPairs) + " pairs, cost mismatches=" + std::to_string(cost_mismatch) +
              ", WER mismatches=" + std::to_string(wer_mismatch) + "/" + std::to_string(wer_checked) +
              " time=" + fmt(secs, 3) + "s"};
}

// --- 3 ---------------------------------------------------------------------------

class EchoGec : public GecBackend {
 public:
  std::string correct_text(const std::string& raw) override { return raw; }
};

class TableGec : public GecBackend {
 public:
  std::map<std::string, std::string> table;
  std::string correct_text(const std::string& raw) override { return table.at(raw); }
};

struct HandCase {
  std::string raw;
  std::string corrected;
  std::map<std::string, int> labels;  // hand count per error type
  int words;                          // hand count of whitespace words in raw
};

const std::vector<HandCase>& hand_cases() {
  static const std::vector<HandCase> cases = {
      {"The dog run in the park.", "The dog runs in the park.", {{"R:VERB:SVA", 1}}, 6},
      {"Yesterday we play games.", "Yesterday we played games.", {{"R:VERB:TENSE", 1}}, 4},
      {"I have two cat.", "I have two cats.", {{"R:NOUN:NUM", 1}}, 4},
      {"He is in park.", "He is in the park.", {{"M:DET", 1}}, 4},
      {"The the cat sleeps.", "The cat sleeps.", {{"U:DET", 1}}, 4},
      {"My friend like apples.", "My friend likes apples.", {{"R:VERB:SVA", 1}}, 4},
      {"I went at the beach.", "I went to the beach.", {{"R:PREP", 1}}, 5},
      {"The cat sleep on the bed and the dog bark.", "The cat sleeps on the bed and the dog barks.",
       {{"R:VERB:SVA", 2}}, 10},
      {"I like play football.", "I like to play football.", {{"M:PART", 1}}, 4},
      {"The car red is fast.", "The red car is fast.", {{"R:WO", 1}}, 5},
      {"She has three book.", "She has three books.", {{"R:NOUN:NUM", 1}}, 4},
      {"He walk to the store every day.", "He walks to the store every day.", {{"R:VERB:SVA", 1}}, 7},
      {"I see a bird in sky.", "I see a bird in the sky.", {{"M:DET", 1}}, 6},
      {"The boy eat an apple.", "The boy eats an apple.", {{"R:VERB:SVA", 1}}, 5},
      {"It is a sunny day.", "It is a sunny day.", {}, 5},
      {"The girl have two dog.", "The girl has two dogs.", {{"R:VERB:SVA", 1}, {"R:NOUN:NUM", 1}}, 5},
      {"We sit on on the grass.", "We sit on the grass.", {{"U:PREP", 1}}, 6},
      {"He plays with ball.", "He plays with a ball.", {{"M:DET", 1}}, 4},
      {"Last week she visit her friend.", "Last week she visited her friend.", {{"R:VERB:TENSE", 1}}, 6},
      {"The bird fly over the tree.", "The bird flies over the tree.", {{"R:VERB:SVA", 1}}, 6},
  };
  return cases;
}

Outcome grammar_identity() {
  RuleTagger tagger;
  std::vector<std::string> all_labels;
  for (const auto& c : hand_cases())
    for (const auto& [l, n] : c.labels)
      for (int i = 0; i < n; ++i) all_labels.push_back(l);
  const ErrorTaxonomy tax = freeze_taxonomy(all_labels);

  EchoGec echo;
  std::size_t nonzero_identity = 0;
  for (const auto& c : hand_cases()) {
    const auto a = analyze_grammar(echo, tagger, c.raw);
    std::vector<std::string> labels;
    for (const auto& e : a.edits) labels.push_back(tax.canonical(e.error_type));
    if (grammar_features(tax, labels, c.raw).freqs.squaredNorm() != 0.0) ++nonzero_identity;
  }

  TableGec gec;
  for (const auto& c : hand_cases()) gec.table[c.raw] = c.corrected;
  std::size_t mismatched = 0;
  std::string first_mismatch;
  for (const auto& c : hand_cases()) {
    const auto a = analyze_grammar(gec, tagger, c.raw);
    std::vector<std::string> labels;
    for (const auto& e : a.edits) labels.push_back(tax.canonical(e.error_type));
    const auto g = grammar_features(tax, labels, c.raw);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(tax.capacity());
    for (const auto& [l, n] : c.labels)
      expected(static_cast<Eigen::Index>(tax.index_of(l))) = static_cast<double>(n) / static_cast<double>(c.words);
    if (g.word_count != c.words || g.freqs != expected) {
      ++mismatched;
      if (first_mismatch.empty()) {
        first_mismatch = " first='" + c.raw + "' got=[";
        for (const auto& l : labels) first_mismatch += l + " ";
        first_mismatch += "]";
      }
    }
  }
  return {nonzero_identity == 0 && mismatched == 0,
          "identity non-zero=" + std::to_string(nonzero_identity) + "/" + std::to_string(hand_cases().size()) +
              ", hand-count mismatches=" + std::to_string(mismatched) + "/" + std::to_string(hand_cases().size()) +
              first_mismatch};
}

// --- shared pipeline fixture --------------------------------------------------------

PipelineConfig pipeline_config(const std::filesystem::path& root, std::uint64_t seed) {
  PipelineConfig cfg;
  SyntheticOptions opt;
  opt.seed = seed;
  cfg.manifest = generate_synthetic_corpus(root / "corpus", opt);
  cfg.output_dir = root / "out";
  cfg.seed = seed;
  cfg.split.unknown_set = "set-03";
  cfg.extract.workers = 2;
  cfg.model = test::tiny_config();
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  cfg.train.learning_rate = 1e-3;
  return cfg;
}

// --- 4 ---------------------------------------------------------------------------

Outcome shape_contracts(const PipelineConfig& cfg) {
  const FeatureStore store(cfg.features_dir());
  const auto split = split_from_json(store.load_schemas().at("split"));
  std::size_t bad_bundles = 0, checked = 0;
  for (const auto* part : {&split.train, &split.dev, &split.known_test, &split.unknown_test})
    for (const auto& id : *part) {
      const auto b = store.load_bundle(id, cfg.features);
      ++checked;
      if (b.qr_seq.cols() != 256 || b.s_er.size() != 4 || b.s_ir.size() != 4 || b.syntax_seq.cols() != 247 ||
          b.grammar.size() != 265 || b.delivery_seq.cols() != 14)
        ++bad_bundles;
    }

  ModelConfig full;
  full.seed = 5;
  const ScoringModel model(full);
  Rng rng(404);
  int bad_lengths = 0;
  for (int len = 1; len <= 64; ++len) {
    const auto b = test::random_bundle(rng, len, len, len);
    const auto p = model.predict(b);
    if (p.logits.size() != kNumClasses || !p.logits.allFinite()) ++bad_lengths;
  }
  return {bad_bundles == 0 && checked == 40 && bad_lengths == 0,
          "bundles checked=" + std::to_string(checked) + " wrong dims=" + std::to_string(bad_bundles) +
              ", lengths 1..64 with bad logits=" + std::to_string(bad_lengths)};
}

// --- 5 ---------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  ScoringModel model(test::tiny_config(55));
  Rng rng(505);
  const auto bundle = test::random_bundle(rng, 3, 4, 5);
  const auto r = test::gradient_check(model, bundle, 2);
  const double secs = seconds_since(t0);
  return {r.worst_relative_error <= kGradRelTol && r.entries_checked == model.parameter_count() &&
              r.unexpected_zero.empty() && secs < kGradSeconds,
          "entries=" + std::to_string(r.entries_checked) + " worst rel err=" + fmt(r.worst_relative_error, 3) + " (" +
               r.worst_param + "), zero-gradient tensors=" + std::to_string(r.zero_tensors) + " time=" + fmt(secs, 3) + "s"};
}

// --- 6 ---------------------------------------------------------------------------

Outcome overfit_sanity(PipelineConfig cfg) {
  const auto t0 = Clock::now();
  cfg.model.hidden_dim = 32;
  cfg.model.n_heads = 4;
  cfg.model.ffn_dim = 64;
  cfg.model.n_encoder_layers = 1;
  cfg.model.dropout = 0.0;
  cfg.train.epochs = kOverfitEpochs;
  cfg.train.batch_size = 4;
  cfg.train.learning_rate = 1e-3;
  cfg.train.stop_at_perfect_train = true;
  const auto trained = train_from_store(cfg, nullptr);
  const auto& log = trained.result.log;
  const double final_train = log.empty() ? 0.0 : log.back().train_accuracy;

  const FeatureStore store(cfg.features_dir());
  const auto split = split_from_json(store.load_schemas().at("split"));
  const auto train_ex = load_split_examples(store, split, "train", cfg.train.target, cfg.features);
  const auto dev_ex = load_split_examples(store, split, "dev", cfg.train.target, cfg.features);
  std::map<int, int> freq;
  for (const auto& e : train_ex.examples) ++freq[e.gold];
  int majority = 1;
  for (const auto& [k, n] : freq)
    if (n > freq[majority]) majority = k;
  double baseline = 0.0;
  for (const auto& e : dev_ex.examples) baseline += e.gold == majority ? 1.0 : 0.0;
  baseline /= static_cast<double>(dev_ex.examples.size());
  const double dev = evaluate(trained.result.best_model, dev_ex.examples, "dev", "holistic").accuracy;
  const double secs = seconds_since(t0);
  return {final_train == 1.0 && static_cast<int>(log.size()) <= kOverfitEpochs && dev > baseline &&
              secs < kOverfitSeconds,
          "train acc=" + fmt(final_train) + " after " + std::to_string(log.size()) + " epochs, dev acc=" + fmt(dev) +
              " (n=" + std::to_string(dev_ex.examples.size()) + ") vs majority baseline=" + fmt(baseline) +
              " time=" + fmt(secs, 4) + "s"};
}

// --- 7 ---------------------------------------------------------------------------

Outcome ablation_fidelity(PipelineConfig cfg) {
  cfg.train.epochs = 1;
  const std::map<std::string, std::string> named = {{"w/o normalized", "features.grammar_normalized"},
                                                    {"only exemplar-response", "features.use_ir"},
                                                    {"w/o Grammar", "features.use_grammar"},
                                                    {"w/o Multifaceted", "features.multifaceted"}};
  std::vector<AblationCell> grid;
  for (const auto& cell : standard_ablation_grid(cfg))
    if (grid.empty() || named.count(cell.name)) grid.push_back(cell);
  const auto rows = ablate_command(cfg, grid);

  const auto results = nlohmann::json::parse(std::ifstream(cfg.output_dir / "ablation" / "results.json"));
  std::size_t wrong = 0;
  std::set<std::string> labels;
  std::string problems;
  for (const auto& row : results) {
    const std::string name = row.at("name");
    labels.insert(name);
    if (!row.at("ok").get<bool>()) {
      ++wrong;
      problems += " " + name + ":failed";
      continue;
    }
    if (name == grid.front().name) {
      if (!row.at("config_diff").empty()) ++wrong, problems += " base:diff";
      continue;
    }
    const auto& diff = row.at("config_diff");
    if (diff.size() != 1 || !diff.contains(named.at(name)) || diff.at(named.at(name)).at("cell") != false) {
      ++wrong;
      problems += " " + name + ":diff=" + diff.dump();
    }
    if (!std::filesystem::exists(cfg.output_dir / "ablation")) ++wrong;
  }

  // The toggles must reach the model inputs.
  const FeatureStore store(cfg.features_dir());
  const auto id = split_from_json(store.load_schemas().at("split")).train.front();
  const auto stored = store.load_stored(id);
  const auto base = assemble_bundle(stored, cfg.features);
  auto t = cfg.features;
  t.use_grammar = false;
  const bool grammar_off = assemble_bundle(stored, t).grammar.squaredNorm() == 0.0 && base.grammar.squaredNorm() > 0.0;
  t = cfg.features;
  t.multifaceted = false;
  const auto mf = assemble_bundle(stored, t);
  const bool multifaceted_off = mf.s_er.squaredNorm() == 0.0 && mf.s_ir.squaredNorm() == 0.0;
  t = cfg.features;
  t.use_ir = false;
  const auto er_only = assemble_bundle(stored, t);
  const bool ir_off = er_only.s_ir.squaredNorm() == 0.0 && er_only.s_er == base.s_er;
  t = cfg.features;
  t.grammar_normalized = false;
  const bool counts = assemble_bundle(stored, t).grammar == stored.get("grammar_count").col(0);

  const bool pass = wrong == 0 && labels.size() == grid.size() && rows.size() == grid.size() && grammar_off &&
                    multifaceted_off && ir_off && counts;
  return {pass, std::to_string(labels.size()) + " distinct runs, diff violations=" + std::to_string(wrong) + problems +
                    ", inputs: grammar-off=" + (grammar_off ? "ok" : "bad") +
                    " multifaceted-off=" + (multifaceted_off ? "ok" : "bad") + " ir-off=" + (ir_off ? "ok" : "bad") +
                    " raw-counts=" + (counts ? "ok" : "bad")};
}

// --- 8 ---------------------------------------------------------------------------

Outcome delivery_ground_truth() {
  const int rate = 16000;
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<std::size_t>(2.2 * rate), 0.0);
  for (auto [b, e] : {std::pair{0.1, 0.6}, std::pair{1.4, 1.9}})
    for (auto i = static_cast<std::size_t>(b * rate); i < static_cast<std::size_t>(e * rate); ++i)
      w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 200.0 * static_cast<double>(i) / rate);
  const auto f = delivery_features(w, {{"one", 0.1, 0.6}, {"two", 1.4, 1.9}});
  const double pitch = f.values(0, kPitchMean);
  const double pause = f.values(1, kPrecedingPause);
  return {std::abs(pitch - 200.0) <= kPitchTolHz && std::abs(pause - 0.8) <= kPauseTolS,
          "pitch mean=" + fmt(pitch, 6) + " Hz (200 +-5), pause=" + fmt(pause, 6) + " s (0.8 +-0.02)"};
}

// --- 9 ---------------------------------------------------------------------------

std::string run_once(const std::filesystem::path& root) {
  auto cfg = pipeline_config(root, 77);
  const auto ex = extract_features(cfg);
  if (!ex.failures.empty()) return "extract failed";
  const auto t = train_command(cfg);
  std::string out;
  for (const std::string split : {"dev", "known_test", "unknown_test"}) {
    eval_command(cfg, t.checkpoint, split);
    out += test::read_all(cfg.output_dir / "reports" / (split + ".json"));
    out += test::read_all(cfg.output_dir / "reports" / (split + ".txt"));
  }
  out += test::read_all(cfg.output_dir / "train_log.jsonl");
  out += test::read_all(t.checkpoint);
  return out;
}

Outcome determinism() {
  test::TempDir a, b;
  const auto ra = run_once(a.path());
  const auto rb = run_once(b.path());
  return {ra == rb && ra.size() > 100,
          "reports+log+checkpoint bytes=" + std::to_string(ra.size()) + (ra == rb ? " identical" : " DIFFER")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception ") + error_kind(e) + ": " + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << n << "] " << name << "  " << o.detail << std::endl;
  };

  test::TempDir shared;
  const auto cfg = pipeline_config(shared.path(), 0);
  std::optional<ExtractSummary> extracted;
  try {
    extracted = extract_features(cfg);
  } catch (const std::exception& e) {
    std::cout << "setup: extraction failed: " << e.what() << std::endl;
  }

  report(1, "normalization contract", normalization_contract);
  report(2, "alignment oracle", alignment_oracle);
  report(3, "grammar feature identity", grammar_identity);
  report(4, "shape contracts", [&] { return shape_contracts(cfg); });
  report(5, "gradient check", gradient_check);
  report(6, "overfit sanity", [&] { return overfit_sanity(cfg); });
  report(7, "ablation harness fidelity", [&] { return ablation_fidelity(cfg); });
  report(8, "delivery ground truth", delivery_ground_truth);
  report(9, "end-to-end determinism", determinism);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures;
}
