#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asa/common.hpp"
#include "asa/corpus.hpp"
#include "asa/pipeline.hpp"

extern char** environ;

namespace {

struct CommonFlags {
  std::string config;
  std::string manifest;
  std::string out;
  std::string splitter;
  std::string splitter_endpoint;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", f.manifest, "Corpus manifest (overrides the config)");
  cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", f.seed, "Seed for splits, projections and training");
  cmd->add_option("--splitter", f.splitter, "Response splitter backend")->check(CLI::IsMember({"llm", "fallback"}));
  cmd->add_option("--splitter-endpoint", f.splitter_endpoint, "Generation endpoint for --splitter llm");
}

asa::PipelineConfig resolve(const CommonFlags& f) {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) env.emplace_back(*e);
  std::optional<std::filesystem::path> path;
  if (!f.config.empty()) path = f.config;
  asa::PipelineConfig c = asa::load_config(path, env);
  if (!f.manifest.empty()) c.manifest = f.manifest;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.seed) c.seed = *f.seed;
  if (!f.splitter.empty()) c.splitter.backend = f.splitter;
  if (!f.splitter_endpoint.empty()) c.splitter.endpoint = f.splitter_endpoint;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-aspect spoken response scoring"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write the synthetic corpus");
  std::string gen_out;
  asa::SyntheticOptions gen;
  bool no_audio = false;
  generate->add_option("--out", gen_out, "Destination directory")->required();
  generate->add_option("--n-sets", gen.n_sets, "Question sets")->check(CLI::Range(1, 4));
  generate->add_option("--per-set", gen.n_per_set, "Responses per question set")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_flag("--no-audio", no_audio, "Skip WAV rendering");

  CommonFlags extract_flags, train_flags, eval_flags, ablate_flags;
  auto* extract = app.add_subcommand("extract", "Extract features into the feature store");
  add_common(extract, extract_flags);
  auto* train = app.add_subcommand("train", "Train a scoring model on extracted features");
  add_common(train, train_flags);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  add_common(eval, eval_flags);
  std::string split = "known_test", checkpoint;
  eval->add_option("--split", split, "Split to evaluate")->check(CLI::IsMember({"train", "dev", "known_test", "unknown_test"}));
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default <output_dir>/model.ckpt)");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the feature ablation grid");
  add_common(ablate, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      gen.with_audio = !no_audio;
      const auto manifest = asa::generate_synthetic_corpus(gen_out, gen);
      std::cout << manifest.string() << "\n";
    } else if (extract->parsed()) {
      const auto summary = asa::extract_features(resolve(extract_flags));
      std::cout << "responses: " << summary.total << "  computed: " << summary.computed
                << "  cached: " << summary.cached << "  failed: " << summary.failures.size() << "\n";
      for (const auto& f : summary.failures) std::cerr << f.id << ": " << f.kind << ": " << f.message << "\n";
      if (!summary.failures.empty()) return 2;
    } else if (train->parsed()) {
      const auto s = asa::train_command(resolve(train_flags));
      std::cout << "checkpoint: " << s.checkpoint.string() << "\nlog: " << s.log.string() << "\ntrain: " << s.n_train
                << "  dev: " << s.n_dev << "  best epoch: " << s.best_epoch
                << "  best dev accuracy: " << s.best_dev_accuracy << "\n";
    } else if (eval->parsed()) {
      const auto config = resolve(eval_flags);
      const auto report = asa::eval_command(config, checkpoint.empty() ? config.checkpoint_path() : std::filesystem::path(checkpoint), split);
      std::cout << report.to_table();
    } else if (ablate->parsed()) {
      const auto config = resolve(ablate_flags);
      const auto rows = asa::ablate_command(config, asa::standard_ablation_grid(config));
      std::cout << asa::ablation_table(rows, {"dev", "known_test", "unknown_test"});
      for (const auto& r : rows)
        if (!r.ok) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << asa::error_kind(e) << ": " << e.what() << "\n";
    return asa::exit_code_for(e);
  }
  return 0;
}
