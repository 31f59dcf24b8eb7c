#include "asa/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "asa/common.hpp"

namespace asa {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxQuestions = 4;

std::string record_tag(std::size_t line_no, const std::string& id) {
  std::string tag = "manifest line " + std::to_string(line_no);
  if (!id.empty()) tag += " (record '" + id + "')";
  return tag;
}

std::optional<int> optional_score(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

void put_score(json& j, const char* key, const std::optional<int>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

QuestionSet question_set_from_json(const json& j) {
  QuestionSet qs;
  qs.id = j.at("id").get<std::string>();
  qs.questions = j.at("questions").get<std::vector<std::string>>();
  qs.exemplar_text = j.value("exemplar_text", std::string{});
  if (j.contains("exemplar_segments") && !j.at("exemplar_segments").is_null())
    qs.exemplar_segments = j.at("exemplar_segments").get<std::vector<std::string>>();
  qs.image_ref = j.value("image", std::string{});
  return qs;
}

ResponseRecord response_from_json(const json& j) {
  ResponseRecord r;
  r.id = j.at("id").get<std::string>();
  r.question_set_id = j.at("question_set_id").get<std::string>();
  if (j.contains("audio") && !j.at("audio").is_null()) r.audio_ref = j.at("audio").get<std::string>();
  r.transcript = j.at("transcript").get<std::string>();
  if (j.contains("word_timestamps") && !j.at("word_timestamps").is_null()) {
    std::vector<WordTimestamp> ts;
    for (const auto& w : j.at("word_timestamps")) {
      if (!w.is_array() || w.size() != 3) throw ParseError("word_timestamps entries must be [token, start_s, end_s]");
      ts.push_back({w[0].get<std::string>(), w[1].get<double>(), w[2].get<double>()});
    }
    r.word_timestamps = std::move(ts);
  }
  if (j.contains("scores")) {
    const json& s = j.at("scores");
    r.scores.holistic = optional_score(s, "holistic");
    r.scores.relevance = optional_score(s, "relevance");
    r.scores.language_use = optional_score(s, "language_use");
  }
  return r;
}

void check_score(const std::optional<int>& s, const char* name) {
  if (s && (*s < 1 || *s > 5))
    throw ParseError(std::string("score '") + name + "' = " + std::to_string(*s) + " outside 1..5");
}

}  // namespace

std::string to_string(ScoreTarget t) {
  switch (t) {
    case ScoreTarget::kHolistic: return "holistic";
    case ScoreTarget::kRelevance: return "relevance";
    case ScoreTarget::kLanguageUse: return "language_use";
  }
  return "holistic";
}

ScoreTarget parse_score_target(const std::string& s) {
  if (s == "holistic") return ScoreTarget::kHolistic;
  if (s == "relevance") return ScoreTarget::kRelevance;
  if (s == "language_use") return ScoreTarget::kLanguageUse;
  throw ConfigError("unknown score target '" + s + "'");
}

std::optional<int> score_for(const ScoreLabel& label, ScoreTarget target) {
  switch (target) {
    case ScoreTarget::kHolistic: return label.holistic;
    case ScoreTarget::kRelevance: return label.relevance;
    case ScoreTarget::kLanguageUse: return label.language_use;
  }
  return std::nullopt;
}

const QuestionSet& Corpus::question_set(const std::string& id) const {
  for (const auto& qs : question_sets)
    if (qs.id == id) return qs;
  throw ReferentialIntegrityError("unknown question set '" + id + "'");
}

const ResponseRecord& Corpus::response(const std::string& id) const {
  for (const auto& r : responses)
    if (r.id == id) return r;
  throw LookupError("unknown response '" + id + "'");
}

std::filesystem::path Corpus::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute()) return p;
  return base_dir / p;
}

void validate(const QuestionSet& qs) {
  if (qs.id.empty()) throw ParseError("question set without id");
  if (qs.questions.empty()) throw ParseError("question set '" + qs.id + "' has no questions");
  if (qs.questions.size() > kMaxQuestions)
    throw ParseError("question set '" + qs.id + "' has " + std::to_string(qs.questions.size()) +
                     " questions; at most 4 are supported");
  if (qs.exemplar_segments && qs.exemplar_segments->size() != qs.questions.size())
    throw ParseError("question set '" + qs.id + "' exemplar_segments length differs from question count");
}

void validate(const ResponseRecord& r) {
  if (r.id.empty()) throw ParseError("response without id");
  check_score(r.scores.holistic, "holistic");
  check_score(r.scores.relevance, "relevance");
  check_score(r.scores.language_use, "language_use");
  if (r.word_timestamps) {
    double prev_end = 0.0;
    for (const auto& w : *r.word_timestamps) {
      if (!(w.start_s >= 0.0) || !(w.end_s >= w.start_s))
        throw ParseError("response '" + r.id + "' has an invalid word interval for '" + w.token + "'");
      if (w.start_s < prev_end)
        throw ParseError("response '" + r.id + "' has overlapping word timestamps at '" + w.token + "'");
      prev_end = w.end_s;
    }
  }
}

json to_json(const QuestionSet& qs) {
  json j;
  j["kind"] = "question_set";
  j["id"] = qs.id;
  j["questions"] = qs.questions;
  j["exemplar_text"] = qs.exemplar_text;
  if (qs.exemplar_segments) j["exemplar_segments"] = *qs.exemplar_segments;
  j["image"] = qs.image_ref;
  return j;
}

json to_json(const ResponseRecord& r) {
  json j;
  j["kind"] = "response";
  j["id"] = r.id;
  j["question_set_id"] = r.question_set_id;
  if (r.audio_ref) j["audio"] = *r.audio_ref;
  j["transcript"] = r.transcript;
  if (r.word_timestamps) {
    json ts = json::array();
    for (const auto& w : *r.word_timestamps) ts.push_back(json::array({w.token, w.start_s, w.end_s}));
    j["word_timestamps"] = std::move(ts);
  }
  json s = json::object();
  put_score(s, "holistic", r.scores.holistic);
  put_score(s, "relevance", r.scores.relevance);
  put_score(s, "language_use", r.scores.language_use);
  j["scores"] = std::move(s);
  return j;
}

Corpus load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Corpus corpus;
  corpus.base_dir = path.parent_path();

  std::unordered_set<std::string> set_ids, response_ids;
  std::vector<std::size_t> response_lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(record_tag(line_no, "") + ": " + e.what());
    }
    std::string id = j.is_object() ? j.value("id", std::string{}) : std::string{};
    try {
      if (!j.is_object() || !j.contains("kind")) throw ParseError("missing 'kind'");
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "question_set") {
        QuestionSet qs = question_set_from_json(j);
        validate(qs);
        if (!set_ids.insert(qs.id).second) throw ParseError("duplicate question set id");
        if (options.require_images) {
          if (qs.image_ref.empty()) throw ParseError("question set has no image");
          if (!std::filesystem::is_regular_file(corpus.resolve(qs.image_ref)))
            throw ParseError("image '" + qs.image_ref + "' not found");
        }
        corpus.question_sets.push_back(std::move(qs));
      } else if (kind == "response") {
        ResponseRecord r = response_from_json(j);
        validate(r);
        if (!response_ids.insert(r.id).second) throw ParseError("duplicate response id");
        if (options.require_audio && r.audio_ref &&
            !std::filesystem::is_regular_file(corpus.resolve(*r.audio_ref)))
          throw ParseError("audio '" + *r.audio_ref + "' not found");
        corpus.responses.push_back(std::move(r));
        response_lines.push_back(line_no);
      } else {
        throw ParseError("unknown kind '" + kind + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(record_tag(line_no, id) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(record_tag(line_no, id) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < corpus.responses.size(); ++i) {
    const auto& r = corpus.responses[i];
    if (!set_ids.count(r.question_set_id))
      throw ReferentialIntegrityError(record_tag(response_lines[i], r.id) + ": unknown question set '" +
                                      r.question_set_id + "'");
  }
  return corpus;
}

void write_manifest(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& qs : corpus.question_sets) out << to_json(qs).dump() << '\n';
  for (const auto& r : corpus.responses) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

const std::vector<std::string>& CorpusSplit::get(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "known_test") return known_test;
  if (name == "unknown_test") return unknown_test;
  throw InputError("unknown split '" + name + "'");
}

json to_json(const CorpusSplit& split) {
  return json{{"train", split.train},
              {"dev", split.dev},
              {"known_test", split.known_test},
              {"unknown_test", split.unknown_test}};
}

CorpusSplit split_from_json(const json& j) {
  CorpusSplit s;
  s.train = j.at("train").get<std::vector<std::string>>();
  s.dev = j.at("dev").get<std::vector<std::string>>();
  s.known_test = j.at("known_test").get<std::vector<std::string>>();
  s.unknown_test = j.at("unknown_test").get<std::vector<std::string>>();
  return s;
}

CorpusSplit make_splits(const std::vector<QuestionSet>& question_sets,
                        const std::vector<ResponseRecord>& records,
                        const std::string& unknown_set_id, const SplitRatios& ratios,
                        std::uint64_t seed) {
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw InputError("split ratios must sum to 1");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0) throw InputError("split ratios must be non-negative");
  if (!unknown_set_id.empty()) {
    bool found = false;
    for (const auto& qs : question_sets) found = found || qs.id == unknown_set_id;
    if (!found) throw InputError("unknown-test question set '" + unknown_set_id + "' does not exist");
  }

  CorpusSplit split;
  std::vector<std::string> pool;
  for (const auto& r : records) {
    if (!unknown_set_id.empty() && r.question_set_id == unknown_set_id)
      split.unknown_test.push_back(r.id);
    else
      pool.push_back(r.id);
  }
  if (pool.size() < 3)
    throw InsufficientDataError("need at least 3 responses outside the unknown set, got " +
                                std::to_string(pool.size()));

  Rng rng(seed);
  rng.shuffle(pool);
  const std::size_t n = pool.size();
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
  const auto n_dev = static_cast<std::size_t>(std::floor(ratios.dev * static_cast<double>(n) + 1e-9));
  split.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train),
                   pool.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  split.known_test.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), pool.end());
  return split;
}

}  // namespace asa
