#include "asa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "asa/common.hpp"
#include "asa/delivery.hpp"
#include "asa/http_client.hpp"
#include "asa/media.hpp"

namespace asa {

namespace {

using nlohmann::json;

constexpr const char* kExtractorVersion = "asa-extract-1";
const std::vector<std::string> kSplitNames = {"train", "dev", "known_test", "unknown_test"};

bool is_endpoint(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

template <typename F>
void each_key(const json& j, const std::string& section, F&& assign) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string path = section.empty() ? key : section + "." + key;
    bool known = false;
    try {
      known = assign(key, v);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + path + "' has the wrong type: " + e.what());
    }
    if (!known) throw ConfigError("unknown config key '" + path + "'");
  }
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("failed writing " + p.string());
  }
  std::filesystem::rename(tmp, p);
}

std::string file_hash(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) return "missing";
  const auto bytes = read_file_bytes(p);
  return hex64(fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
}

json sims_json(const std::vector<std::optional<double>>& sims) {
  json a = json::array();
  for (const auto& s : sims) a.push_back(s ? json(*s) : json(nullptr));
  return a;
}

std::vector<std::optional<double>> sims_from_json(const json& a) {
  std::vector<std::optional<double>> out;
  for (const auto& v : a) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return out;
}

Eigen::MatrixXd slots_column(const std::array<double, kRelevanceSlots>& slots) {
  Eigen::MatrixXd m(kSlotDim, 1);
  for (std::size_t i = 0; i < kRelevanceSlots; ++i) m(static_cast<Eigen::Index>(i), 0) = slots[i];
  return m;
}

std::string fingerprint_of(const json& j) { return hex64(fnv1a(j.dump())); }

json scores_json(const ScoreLabel& s) {
  json j = json::object();
  if (s.holistic) j["holistic"] = *s.holistic;
  if (s.relevance) j["relevance"] = *s.relevance;
  if (s.language_use) j["language_use"] = *s.language_use;
  return j;
}

// --- per-set context shared by all responses of one question set ---------------

struct SetContext {
  const QuestionSet* qs = nullptr;
  std::vector<std::string> exemplar_segments;
  std::optional<Image> image;
  std::string image_hash;
  std::optional<ExtractFailure> image_failure;
  std::optional<ExtractFailure> exemplar_failure;
};

ExtractFailure failure_of(const std::string& id, const std::exception& e) { return {id, error_kind(e), e.what()}; }

std::vector<WordTimestamp> transcribe(const PipelineConfig& cfg, const std::filesystem::path& audio) {
  const auto bytes = read_file_bytes(audio);
  const json reply = post_json(cfg.asr.endpoint, {{"audio_wav_base64", base64_encode(bytes)}});
  std::vector<WordTimestamp> words;
  try {
    for (const auto& w : reply.at("words"))
      words.push_back({w.at("token").get<std::string>(), w.at("start").get<double>(), w.at("end").get<double>()});
  } catch (const json::exception& e) {
    throw TransportError(std::string("ASR reply is malformed: ") + e.what());
  }
  return words;
}

TensorFile extract_raw(Backends& b, const SetContext& set, const Corpus& corpus, const ResponseRecord& r,
                       const PipelineConfig& cfg, const QuestionResponseProjector& projector, bool need_image) {
  if (set.exemplar_failure) throw InputError("exemplar of set '" + set.qs->id + "': " + set.exemplar_failure->message);
  if (need_image && !set.image) throw MediaError(set.image_failure->message);
  const auto& questions = set.qs->questions;
  const std::string& transcript = r.transcript;
  if (trim(transcript).empty()) throw InputError("empty transcript");

  const SplitAlignment split = split_response(b.splitter, questions, transcript, SplitSource::kResponse);
  const std::size_t k = questions.size();
  std::vector<std::optional<double>> er_split(k), ir_split(k), er_whole(k), ir_whole(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::string& e = set.exemplar_segments[j];
    er_split[j] = exemplar_response_similarity(*b.text, e, split.segments[j]);
    er_whole[j] = exemplar_response_similarity(*b.text, e, transcript);
    if (set.image) {
      ir_split[j] = image_response_similarity(*b.image, *set.image, split.segments[j]);
      ir_whole[j] = image_response_similarity(*b.image, *set.image, transcript);
    } else {
      // Image stream disabled and no image available: neutral raw values.
      ir_split[j] = ir_whole[j] = 0.0;
    }
  }

  const Eigen::MatrixXd qr = question_response_features(*b.qr, projector, join(questions, " "), transcript);

  const auto tokens = tokenize(transcript);
  const auto annotations = b.syntax->annotate(tokens);
  if (annotations.size() != tokens.size())
    throw AnnotationError("syntax backend returned " + std::to_string(annotations.size()) + " annotations for " +
                          std::to_string(tokens.size()) + " tokens");
  json ann = json::array();
  for (const auto& a : annotations) ann.push_back({a.token, a.upos, a.lemma, a.feats, a.deprel});

  const GrammarAnalysis grammar = analyze_grammar(*b.gec, *b.syntax, transcript);
  json labels = json::array();
  for (const auto& e : grammar.edits) labels.push_back(e.error_type);

  std::vector<WordTimestamp> words;
  std::optional<std::filesystem::path> audio;
  if (r.audio_ref && cfg.extract.use_audio) {
    audio = corpus.resolve(*r.audio_ref);
    if (!std::filesystem::is_regular_file(*audio)) throw MediaError("audio '" + *r.audio_ref + "' not found");
  }
  if (r.word_timestamps) {
    words = *r.word_timestamps;
  } else if (cfg.asr.backend == "http") {
    if (!audio) throw InputError("asr.backend is 'http' but the response has no usable audio");
    words = transcribe(cfg, *audio);
  } else {
    throw AlignmentError("response has no word timestamps and asr.backend is 'manifest'");
  }
  DeliveryFeatures delivery = audio ? delivery_features(read_wav(*audio), words) : delivery_features_from_transcript(words);
  if (delivery.values.rows() == 0) delivery.values = Eigen::MatrixXd::Zero(1, kDeliveryDim);

  TensorFile f;
  f.meta = {{"id", r.id},
            {"question_set_id", r.question_set_id},
            {"transcript", transcript},
            {"n_questions", k},
            {"segments", split.segments},
            {"grounded", split.grounded},
            {"sims", {{"er_split", sims_json(er_split)}, {"ir_split", sims_json(ir_split)},
                      {"er_whole", sims_json(er_whole)}, {"ir_whole", sims_json(ir_whole)}}},
            {"annotations", ann},
            {"edit_labels", labels},
            {"corrected_text", grammar.corrected_text},
            {"m2", to_m2(grammar)},
            {"acoustic", delivery.acoustic},
            {"scores", scores_json(r.scores)}};
  f.tensors["qr"] = qr;
  f.tensors["delivery"] = delivery.values;
  return f;
}

std::vector<TokenAnnotation> annotations_of(const TensorFile& raw) {
  std::vector<TokenAnnotation> out;
  for (const auto& a : raw.meta.at("annotations"))
    out.push_back({a[0].get<std::string>(), a[1].get<std::string>(), a[2].get<std::string>(), a[3].get<std::string>(),
                   a[4].get<std::string>()});
  return out;
}

const char* const kSimVariants[] = {"er_split", "ir_split", "er_whole", "ir_whole"};

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
    else if (!out.empty() && out.back() != '-') out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "cell" : out;
}

json schema_fingerprints(const json& schemas) { return schemas.at("fingerprints"); }

}  // namespace

// --- configuration --------------------------------------------------------------

json PipelineConfig::to_json() const {
  return {{"manifest", manifest.string()},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"split", {{"unknown_set", split.unknown_set}, {"train", split.ratios.train}, {"dev", split.ratios.dev},
                     {"test", split.ratios.test}}},
          {"splitter", {{"backend", splitter.backend}, {"endpoint", splitter.endpoint}, {"strict", splitter.strict},
                        {"max_tokens", splitter.max_tokens}}},
          {"relevance", {{"text_backend", relevance.text_backend}, {"text_dim", relevance.text_dim},
                         {"image_backend", relevance.image_backend}, {"image_dim", relevance.image_dim},
                         {"qr_backend", relevance.qr_backend}, {"qr_dim", relevance.qr_dim}}},
          {"grammar", {{"backend", grammar.backend}, {"endpoint", grammar.endpoint}, {"few_shot", grammar.few_shot}}},
          {"syntax", {{"backend", syntax.backend}}},
          {"asr", {{"backend", asr.backend}, {"endpoint", asr.endpoint}}},
          {"extract", {{"workers", extract.workers}, {"use_audio", extract.use_audio}}},
          {"features", features.to_json()},
          {"model", model.to_json()},
          {"train", train.to_json()}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  each_key(j, "", [&](const std::string& key, const json& v) {
    if (key == "manifest") c.manifest = v.get<std::string>();
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "split")
      each_key(v, "split", [&](const std::string& k, const json& x) {
        if (k == "unknown_set") c.split.unknown_set = x.get<std::string>();
        else if (k == "train") c.split.ratios.train = x.get<double>();
        else if (k == "dev") c.split.ratios.dev = x.get<double>();
        else if (k == "test") c.split.ratios.test = x.get<double>();
        else return false;
        return true;
      });
    else if (key == "splitter")
      each_key(v, "splitter", [&](const std::string& k, const json& x) {
        if (k == "backend") c.splitter.backend = x.get<std::string>();
        else if (k == "endpoint") c.splitter.endpoint = x.get<std::string>();
        else if (k == "strict") c.splitter.strict = x.get<bool>();
        else if (k == "max_tokens") c.splitter.max_tokens = x.get<int>();
        else return false;
        return true;
      });
    else if (key == "relevance")
      each_key(v, "relevance", [&](const std::string& k, const json& x) {
        if (k == "text_backend") c.relevance.text_backend = x.get<std::string>();
        else if (k == "text_dim") c.relevance.text_dim = x.get<int>();
        else if (k == "image_backend") c.relevance.image_backend = x.get<std::string>();
        else if (k == "image_dim") c.relevance.image_dim = x.get<int>();
        else if (k == "qr_backend") c.relevance.qr_backend = x.get<std::string>();
        else if (k == "qr_dim") c.relevance.qr_dim = x.get<int>();
        else return false;
        return true;
      });
    else if (key == "grammar")
      each_key(v, "grammar", [&](const std::string& k, const json& x) {
        if (k == "backend") c.grammar.backend = x.get<std::string>();
        else if (k == "endpoint") c.grammar.endpoint = x.get<std::string>();
        else if (k == "few_shot") c.grammar.few_shot = x.get<std::string>();
        else return false;
        return true;
      });
    else if (key == "syntax")
      each_key(v, "syntax", [&](const std::string& k, const json& x) {
        if (k != "backend") return false;
        c.syntax.backend = x.get<std::string>();
        return true;
      });
    else if (key == "asr")
      each_key(v, "asr", [&](const std::string& k, const json& x) {
        if (k == "backend") c.asr.backend = x.get<std::string>();
        else if (k == "endpoint") c.asr.endpoint = x.get<std::string>();
        else return false;
        return true;
      });
    else if (key == "extract")
      each_key(v, "extract", [&](const std::string& k, const json& x) {
        if (k == "workers") c.extract.workers = x.get<int>();
        else if (k == "use_audio") c.extract.use_audio = x.get<bool>();
        else return false;
        return true;
      });
    else if (key == "features") c.features = FeatureToggles::from_json(v);
    else if (key == "model") c.model = ModelConfig::from_json(v);
    else if (key == "train") c.train = TrainConfig::from_json(v);
    else return false;
    return true;
  });
  return c;
}

void PipelineConfig::validate(bool need_manifest) const {
  const auto& r = split.ratios;
  if (r.train < 0 || r.dev < 0 || r.test < 0 || std::abs(r.train + r.dev + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  if (splitter.backend != "fallback" && splitter.backend != "llm")
    throw ConfigError("splitter.backend must be 'fallback' or 'llm'");
  if (splitter.backend == "llm" && !is_endpoint(splitter.endpoint))
    throw ConfigError("splitter.endpoint must be an http(s) URL when splitter.backend is 'llm'");
  if (splitter.max_tokens < 1) throw ConfigError("splitter.max_tokens must be positive");
  if (grammar.backend != "rules" && grammar.backend != "service")
    throw ConfigError("grammar.backend must be 'rules' or 'service'");
  if (grammar.backend == "service" && !is_endpoint(grammar.endpoint))
    throw ConfigError("grammar.endpoint must be an http(s) URL when grammar.backend is 'service'");
  if (!grammar.few_shot.empty() && !std::filesystem::is_regular_file(grammar.few_shot))
    throw ConfigError("grammar.few_shot file '" + grammar.few_shot + "' does not exist");
  if (asr.backend != "manifest" && asr.backend != "http") throw ConfigError("asr.backend must be 'manifest' or 'http'");
  if (asr.backend == "http" && !is_endpoint(asr.endpoint))
    throw ConfigError("asr.endpoint must be an http(s) URL when asr.backend is 'http'");
  if (relevance.text_dim < 1 || relevance.qr_dim < 1) throw ConfigError("relevance dimensions must be positive");
  if (is_endpoint(relevance.image_backend) && relevance.image_dim < 1)
    throw ConfigError("relevance.image_dim must be set for an image embedding endpoint");
  if (extract.workers < 0) throw ConfigError("extract.workers must be non-negative");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  model.validate();
  train.validate();
  if (need_manifest) {
    if (manifest.empty()) throw ConfigError("no manifest configured (set 'manifest' or pass --manifest)");
    if (!std::filesystem::is_regular_file(manifest))
      throw ConfigError("manifest '" + manifest.string() + "' does not exist");
  }
}

json apply_env_overrides(json config, const std::vector<std::string>& environment) {
  std::vector<std::string> entries;
  for (const auto& e : environment)
    if (e.rfind("ASA__", 0) == 0) entries.push_back(e);
  std::sort(entries.begin(), entries.end());
  if (!config.is_object()) config = json::object();
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = to_lower(e.substr(5, eq - 5));
    const std::string raw = e.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    const auto sep = name.find("__");
    if (sep == std::string::npos) {
      config[name] = value;
    } else {
      const std::string section = name.substr(0, sep), key = name.substr(sep + 2);
      if (section.empty() || key.empty() || key.find("__") != std::string::npos)
        throw ConfigError("malformed override '" + e.substr(0, eq) + "'");
      if (!config.contains(section)) config[section] = json::object();
      if (!config[section].is_object()) throw ConfigError("override '" + e.substr(0, eq) + "' targets a non-section key");
      config[section][key] = value;
    }
  }
  return config;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& environment) {
  json doc = json::object();
  if (path) {
    const std::string text = read_text(*path);
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
  }
  return PipelineConfig::from_json(apply_env_overrides(doc, environment));
}

// --- backends -------------------------------------------------------------------

Backends make_backends(const PipelineConfig& config) {
  Backends b;
  if (config.splitter.backend == "llm")
    b.splitter.generator = std::make_shared<HttpTextGenerator>(config.splitter.endpoint);
  else if (config.splitter.backend == "fallback")
    b.splitter.generator = std::make_shared<FallbackSplitGenerator>();
  else
    throw ConfigError("unknown splitter backend '" + config.splitter.backend + "'");
  b.splitter.max_tokens = config.splitter.max_tokens;
  b.splitter.strict = config.splitter.strict;

  const auto& rel = config.relevance;
  if (rel.text_backend == "hashing") b.text = std::make_unique<HashingSentenceEncoder>(rel.text_dim);
  else if (is_endpoint(rel.text_backend)) b.text = std::make_unique<HttpTextEmbedder>(rel.text_backend, rel.text_dim);
  else throw ConfigError("unknown relevance.text_backend '" + rel.text_backend + "' (hashing or an http URL)");

  if (rel.image_backend == "concept") b.image = std::make_unique<ConceptImageTextEncoder>();
  else if (is_endpoint(rel.image_backend)) b.image = std::make_unique<HttpImageTextEmbedder>(rel.image_backend, rel.image_dim);
  else throw ConfigError("unknown relevance.image_backend '" + rel.image_backend + "' (concept or an http URL)");

  if (rel.qr_backend == "hashing") b.qr = std::make_unique<HashingContextualEncoder>(rel.qr_dim);
  else if (is_endpoint(rel.qr_backend)) b.qr = std::make_unique<HttpContextualEncoder>(rel.qr_backend, rel.qr_dim);
  else throw ConfigError("unknown relevance.qr_backend '" + rel.qr_backend + "' (hashing or an http URL)");

  if (config.grammar.backend == "rules") {
    b.gec = std::make_unique<RuleGecBackend>();
  } else if (config.grammar.backend == "service") {
    std::vector<FewShotExample> shots;
    if (!config.grammar.few_shot.empty()) shots = load_few_shot(config.grammar.few_shot);
    b.gec = std::make_unique<ServiceGecBackend>(std::make_shared<HttpTextGenerator>(config.grammar.endpoint), shots);
  } else {
    throw ConfigError("unknown grammar backend '" + config.grammar.backend + "'");
  }
  b.syntax = make_syntax_backend(config.syntax.backend);
  return b;
}

std::uint64_t qr_projection_seed(const PipelineConfig& config) { return config.seed ^ 0x71722d70726f6aULL; }

// --- extract --------------------------------------------------------------------

json ExtractSummary::to_json() const {
  json f = json::array();
  for (const auto& x : failures) f.push_back({{"id", x.id}, {"kind", x.kind}, {"message", x.message}});
  return {{"total", total}, {"computed", computed}, {"cached", cached}, {"failed", failures.size()}, {"failures", f}};
}

ExtractSummary extract_features(const PipelineConfig& config) {
  config.validate(true);
  LoadOptions load;
  load.require_images = false;
  load.require_audio = false;
  const Corpus corpus = load_manifest(config.manifest, load);
  const FeatureStore store(config.features_dir());
  const bool need_image = config.features.multifaceted && config.features.use_ir;
  const QuestionResponseProjector projector(config.relevance.qr_dim, qr_projection_seed(config));

  // Per-set inputs, computed once.
  Backends main_backends = make_backends(config);
  std::map<std::string, SetContext> sets;
  for (const auto& qs : corpus.question_sets) {
    SetContext ctx;
    ctx.qs = &qs;
    try {
      if (qs.exemplar_segments) {
        if (qs.exemplar_segments->size() != qs.questions.size())
          throw InputError("exemplar_segments count differs from question count");
        ctx.exemplar_segments = *qs.exemplar_segments;
      } else {
        ctx.exemplar_segments =
            split_response(main_backends.splitter, qs.questions, qs.exemplar_text, SplitSource::kExemplar).segments;
      }
    } catch (const std::exception& e) {
      ctx.exemplar_failure = failure_of(qs.id, e);
    }
    const auto image_path = corpus.resolve(qs.image_ref);
    ctx.image_hash = qs.image_ref.empty() ? "none" : file_hash(image_path);
    try {
      if (qs.image_ref.empty()) throw MediaError("question set '" + qs.id + "' has no image");
      if (!std::filesystem::is_regular_file(image_path)) throw MediaError("image '" + qs.image_ref + "' not found");
      ctx.image = read_image(image_path);
    } catch (const std::exception& e) {
      ctx.image_failure = failure_of(qs.id, e);
      if (!dynamic_cast<const MediaError*>(&e)) ctx.image_failure->kind = "MediaError";
    }
    sets.emplace(qs.id, std::move(ctx));
  }

  const json extraction_config = {{"version", kExtractorVersion},
                                  {"splitter", config.to_json()["splitter"]},
                                  {"relevance", config.to_json()["relevance"]},
                                  {"grammar", config.to_json()["grammar"]},
                                  {"few_shot_hash", config.grammar.few_shot.empty() ? "" : file_hash(config.grammar.few_shot)},
                                  {"syntax", config.syntax.backend},
                                  {"asr", config.to_json()["asr"]},
                                  {"use_audio", config.extract.use_audio},
                                  {"qr_seed", qr_projection_seed(config)},
                                  {"need_image", need_image}};

  const auto n = corpus.responses.size();
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = corpus.responses[i];
    const auto& ctx = sets.at(r.question_set_id);
    const json key_doc = {{"record", to_json(r)},
                          {"set", to_json(*ctx.qs)},
                          {"image", ctx.image_hash},
                          {"audio", r.audio_ref && config.extract.use_audio ? file_hash(corpus.resolve(*r.audio_ref)) : "none"},
                          {"config", extraction_config}};
    keys[i] = fingerprint_of(key_doc);
  }

  enum class Outcome { kCached, kComputed, kFailed };
  std::vector<Outcome> outcomes(n, Outcome::kFailed);
  std::vector<std::optional<ExtractFailure>> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    std::optional<Backends> backends;
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const auto& r = corpus.responses[i];
      const auto path = store.raw_path(r.id);
      try {
        if (std::filesystem::is_regular_file(path)) {
          try {
            if (read_tensor_file(path).meta.value("key", "") == keys[i]) {
              outcomes[i] = Outcome::kCached;
              continue;
            }
          } catch (const ParseError&) {
            // Corrupt cache entry; recompute.
          }
        }
        if (!backends) backends.emplace(make_backends(config));
        TensorFile raw = extract_raw(*backends, sets.at(r.question_set_id), corpus, r, config, projector, need_image);
        raw.meta["key"] = keys[i];
        write_tensor_file(path, raw);
        outcomes[i] = Outcome::kComputed;
      } catch (const std::exception& e) {
        failures[i] = failure_of(r.id, e);
        std::error_code ec;
        std::filesystem::remove(path, ec);
      }
    }
  };

  int workers = config.extract.workers;
  if (workers == 0) workers = static_cast<int>(std::min(8u, std::max(1u, std::thread::hardware_concurrency())));
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  ExtractSummary summary;
  summary.total = n;
  std::map<std::string, TensorFile> raws;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = corpus.responses[i].id;
    if (outcomes[i] == Outcome::kFailed) {
      summary.failures.push_back(*failures[i]);
      std::error_code ec;
      std::filesystem::remove(store.bundle_path(id), ec);
      continue;
    }
    (outcomes[i] == Outcome::kCached ? summary.cached : summary.computed) += 1;
    raws.emplace(id, read_tensor_file(store.raw_path(id)));
  }

  // Freeze schemas and normalizers on the extracted training responses.
  const CorpusSplit split =
      make_splits(corpus.question_sets, corpus.responses, config.split.unknown_set, config.split.ratios, config.seed);
  std::vector<const TensorFile*> train_raws;
  for (const auto& id : split.train)
    if (auto it = raws.find(id); it != raws.end()) train_raws.push_back(&it->second);

  if (train_raws.empty()) {
    write_text(store.report_path(), summary.to_json().dump(2) + "\n");
    throw InsufficientDataError("no training response was extracted successfully");
  }

  std::vector<std::vector<TokenAnnotation>> train_annotations;
  std::vector<std::string> train_labels;
  std::size_t max_k = 0;
  for (const auto* raw : train_raws) {
    train_annotations.push_back(annotations_of(*raw));
    for (const auto& l : raw->meta.at("edit_labels")) train_labels.push_back(l.get<std::string>());
    max_k = std::max(max_k, raw->meta.at("n_questions").get<std::size_t>());
  }
  const SyntaxSchema syntax_schema = freeze_syntax_schema(train_annotations);
  const ErrorTaxonomy taxonomy = freeze_taxonomy(train_labels);
  std::map<std::string, SimilarityNormalizer> normalizers;
  for (const char* variant : kSimVariants) {
    std::vector<std::vector<std::optional<double>>> per_question(max_k);
    for (const auto* raw : train_raws) {
      const auto sims = sims_from_json(raw->meta.at("sims").at(variant));
      for (std::size_t j = 0; j < sims.size(); ++j) per_question[j].push_back(sims[j]);
    }
    normalizers.emplace(variant, fit_normalizer(per_question));
  }

  json norm_json = json::object();
  for (const auto& [name, nz] : normalizers) norm_json[name] = nz.to_json();
  const json qr_json = {{"backend", config.relevance.qr_backend},
                        {"token_dim", config.relevance.qr_dim},
                        {"seed", qr_projection_seed(config)}};
  json schemas = {{"syntax_schema", syntax_schema.to_json()},
                  {"taxonomy", taxonomy.to_json()},
                  {"normalizers", norm_json},
                  {"qr", qr_json},
                  {"split", to_json(split)}};
  schemas["fingerprints"] = {{"syntax_schema", syntax_schema.fingerprint()},
                             {"taxonomy", taxonomy.fingerprint()},
                             {"normalizers", fingerprint_of(norm_json)},
                             {"qr", fingerprint_of(qr_json)}};
  const std::string schemas_key = fingerprint_of(schemas);

  for (const auto& [id, raw] : raws) {
    const std::string source_key = hex64(fnv1a(raw.meta.at("key").get<std::string>() + schemas_key));
    const auto bpath = store.bundle_path(id);
    if (std::filesystem::is_regular_file(bpath)) {
      try {
        if (read_tensor_file(bpath).meta.value("source_key", "") == source_key) continue;
      } catch (const ParseError&) {
      }
    }
    namespace bt = bundle_tensor;
    TensorFile bundle;
    bundle.meta = {{"id", id},
                   {"question_set_id", raw.meta.at("question_set_id")},
                   {"scores", raw.meta.at("scores")},
                   {"source_key", source_key}};
    bundle.tensors[bt::kQr] = raw.get("qr");
    bundle.tensors[bt::kSyntax] = encode_syntax(syntax_schema, annotations_of(raw));
    bundle.tensors[bt::kDelivery] = raw.get("delivery");
    const auto& sims = raw.meta.at("sims");
    bundle.tensors[bt::kErSplit] = slots_column(normalize_slots(normalizers.at("er_split"), sims_from_json(sims.at("er_split"))));
    bundle.tensors[bt::kIrSplit] = slots_column(normalize_slots(normalizers.at("ir_split"), sims_from_json(sims.at("ir_split"))));
    bundle.tensors[bt::kErWhole] = slots_column(normalize_slots(normalizers.at("er_whole"), sims_from_json(sims.at("er_whole"))));
    bundle.tensors[bt::kIrWhole] = slots_column(normalize_slots(normalizers.at("ir_whole"), sims_from_json(sims.at("ir_whole"))));
    std::vector<std::string> labels;
    for (const auto& l : raw.meta.at("edit_labels")) labels.push_back(taxonomy.canonical(l.get<std::string>()));
    const auto g = grammar_features(taxonomy, labels, raw.meta.at("transcript").get<std::string>());
    bundle.tensors[bt::kGrammarFreq] = g.freqs;
    bundle.tensors[bt::kGrammarCount] = g.counts;
    write_tensor_file(bpath, bundle);
  }

  write_text(store.schemas_path(), schemas.dump(2) + "\n");
  write_text(store.report_path(), summary.to_json().dump(2) + "\n");
  return summary;
}

// --- train / eval ---------------------------------------------------------------

SplitExamples load_split_examples(const FeatureStore& store, const CorpusSplit& split, const std::string& split_name,
                                  ScoreTarget target, const FeatureToggles& toggles) {
  if (std::find(kSplitNames.begin(), kSplitNames.end(), split_name) == kSplitNames.end())
    throw InputError("unknown split '" + split_name + "' (train, dev, known_test, unknown_test)");
  SplitExamples out;
  std::vector<std::pair<std::string, int>> items;
  for (const auto& id : split.get(split_name)) {
    if (!store.has_bundle(id)) continue;
    TensorFile stored = store.load_stored(id);
    const auto& scores = stored.meta.at("scores");
    const std::string key = to_string(target);
    if (!scores.contains(key)) continue;
    out.bundles.push_back(assemble_bundle(stored, toggles));
    items.emplace_back(id, scores.at(key).get<int>());
  }
  for (std::size_t i = 0; i < items.size(); ++i) out.examples.push_back({items[i].first, &out.bundles[i], items[i].second});
  return out;
}

TrainedModel train_from_store(const PipelineConfig& config, std::ostream* jsonl_log) {
  config.validate(false);
  const FeatureStore store(config.features_dir());
  const json schemas = store.load_schemas();
  const CorpusSplit split = split_from_json(schemas.at("split"));
  const auto target = config.train.target;

  SplitExamples train_set = load_split_examples(store, split, "train", target, config.features);
  SplitExamples dev_set = load_split_examples(store, split, "dev", target, config.features);
  if (train_set.examples.empty())
    throw InsufficientDataError("training split has no extracted response with a " + to_string(target) + " score");

  ModelConfig mc = config.model;
  mc.seed = config.model.seed + config.seed;
  ScoringModel model(mc);

  // Delivery standardization from the real training rows.
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(kSpeechDim), sq = Eigen::RowVectorXd::Zero(kSpeechDim);
  double rows = 0;
  for (const auto& b : train_set.bundles) {
    const Eigen::Index len = b.delivery_len < 0 ? b.delivery_seq.rows() : b.delivery_len;
    for (Eigen::Index r = 0; r < len; ++r) {
      sum += b.delivery_seq.row(r);
      sq += b.delivery_seq.row(r).cwiseProduct(b.delivery_seq.row(r));
      rows += 1;
    }
  }
  const Eigen::RowVectorXd mean = sum / rows;
  Eigen::RowVectorXd scale = (sq / rows - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index c = 0; c < scale.size(); ++c)
    if (scale(c) < 1e-8) scale(c) = 1.0;
  model.set_delivery_standardization(mean, scale);

  TrainedModel out{train(std::move(model), train_set.examples, dev_set.examples, config.train, config.seed, jsonl_log),
                   json::object(), train_set.examples.size(), dev_set.examples.size()};
  out.metadata = {{"target", to_string(target)},
                  {"features", config.features.to_json()},
                  {"fingerprints", schema_fingerprints(schemas)},
                  {"syntax_schema", schemas.at("syntax_schema")},
                  {"taxonomy", schemas.at("taxonomy")},
                  {"normalizers", schemas.at("normalizers")},
                  {"qr", schemas.at("qr")},
                  {"train", config.train.to_json()},
                  {"seed", config.seed},
                  {"best_epoch", out.result.best_epoch},
                  {"best_dev_accuracy", out.result.best_dev_accuracy}};
  return out;
}

TrainSummary train_command(const PipelineConfig& config) {
  const auto log_path = config.output_dir / "train_log.jsonl";
  std::filesystem::create_directories(config.output_dir);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  TrainedModel trained = train_from_store(config, &log);
  save_checkpoint(config.checkpoint_path(), trained.result.best_model, trained.metadata);
  return {config.checkpoint_path(), log_path, trained.result.best_epoch, trained.result.best_dev_accuracy,
          trained.n_train, trained.n_dev};
}

EvalReport eval_command(const PipelineConfig& config, const std::filesystem::path& checkpoint, const std::string& split_name) {
  config.validate(false);
  const FeatureStore store(config.features_dir());
  const json schemas = store.load_schemas();
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const json& meta = ckpt.metadata;
  if (!meta.contains("fingerprints")) throw CompatibilityError("checkpoint carries no feature schemas");
  const json store_fp = schema_fingerprints(schemas);
  for (const char* name : {"syntax_schema", "taxonomy", "normalizers", "qr"}) {
    if (meta.at("fingerprints").value(name, "") != store_fp.value(name, ""))
      throw CompatibilityError(std::string("checkpoint ") + name + " differs from the feature store's " + name +
                               " (re-extract or retrain)");
  }
  const ScoreTarget target = parse_score_target(meta.at("target").get<std::string>());
  const FeatureToggles toggles = FeatureToggles::from_json(meta.at("features"));
  const CorpusSplit split = split_from_json(schemas.at("split"));
  SplitExamples ex = load_split_examples(store, split, split_name, target, toggles);
  EvalReport report = evaluate(ckpt.model, ex.examples, split_name, to_string(target));

  const auto dir = config.output_dir / "reports";
  write_text(dir / (split_name + ".json"), report.to_json().dump(2) + "\n");
  write_text(dir / (split_name + ".txt"), report.to_table());
  return report;
}

// --- ablation -------------------------------------------------------------------

std::vector<AblationCell> standard_ablation_grid(const PipelineConfig& base) {
  const json b = base.to_json();
  std::vector<AblationCell> grid{{"base", b}};
  const std::vector<std::pair<std::string, std::string>> toggles = {
      {"w/o normalized", "grammar_normalized"}, {"only exemplar-response", "use_ir"},
      {"only image-response", "use_er"},        {"w/o response-splitting", "splitting"},
      {"w/o Grammar", "use_grammar"},           {"w/o Multifaceted", "multifaceted"}};
  for (const auto& [name, key] : toggles) {
    json c = b;
    c["features"][key] = false;
    grid.push_back({name, c});
  }
  return grid;
}

std::vector<AblationRow> ablate_command(const PipelineConfig& config, const std::vector<AblationCell>& grid) {
  const auto dir = config.output_dir / "ablation";
  std::set<std::string> used;
  auto runner = [&](const AblationCell& cell) {
    PipelineConfig c = PipelineConfig::from_json(cell.config);
    c.output_dir = config.output_dir;
    std::string stem = slug(cell.name);
    while (!used.insert(stem).second) stem += "-x";
    const auto cell_dir = dir / stem;
    std::filesystem::create_directories(cell_dir);
    std::ofstream log(cell_dir / "train_log.jsonl", std::ios::trunc);
    TrainedModel trained = train_from_store(c, &log);
    save_checkpoint(cell_dir / "model.ckpt", trained.result.best_model, trained.metadata);

    const FeatureStore store(c.features_dir());
    const CorpusSplit split = split_from_json(store.load_schemas().at("split"));
    std::map<std::string, EvalReport> reports;
    for (const std::string s : {"dev", "known_test", "unknown_test"}) {
      SplitExamples ex = load_split_examples(store, split, s, c.train.target, c.features);
      if (ex.examples.empty()) continue;
      reports.emplace(s, evaluate(trained.result.best_model, ex.examples, s, to_string(c.train.target)));
    }
    return reports;
  };
  auto rows = run_ablation(grid, runner);

  json results = json::array();
  for (const auto& r : rows) results.push_back(r.to_json());
  write_text(dir / "results.json", results.dump(2) + "\n");
  write_text(dir / "table.txt", ablation_table(rows, {"dev", "known_test", "unknown_test"}));
  return rows;
}

}  // namespace asa
