#include "asa/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "asa/common.hpp"
#include "asa/lexicon.hpp"

namespace asa {

namespace {

bool has_alpha(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

bool all_alpha(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '\'' || c == '-';
  });
}

TokenAnnotation guess_oov(const std::string& token, bool sentence_initial) {
  TokenAnnotation a{token, "X", to_lower(token), "", ""};
  const std::string lower = to_lower(token);
  if (all_digits(token)) {
    a.upos = "NUM";
    a.feats = "NumType=Card";
  } else if (!has_alpha(token)) {
    a.upos = "SYM";
  } else if (!all_alpha(token)) {
    a.upos = "X";
  } else if (!sentence_initial && std::isupper(static_cast<unsigned char>(token[0]))) {
    a.upos = "PROPN";
    a.lemma = token;
    a.feats = "Number=Sing";
  } else if (lower.size() > 4 && lower.ends_with("ly")) {
    a.upos = "ADV";
  } else if (lower.size() > 5 && lower.ends_with("ing")) {
    a.upos = "VERB";
    a.lemma = lower.substr(0, lower.size() - 3);
    a.feats = "VerbForm=Ger";
  } else if (lower.size() > 4 && lower.ends_with("ed")) {
    a.upos = "VERB";
    a.lemma = lower.substr(0, lower.size() - 2);
    a.feats = "Mood=Ind|Tense=Past|VerbForm=Fin";
  } else if (lower.size() > 3 && lower.ends_with("s") && !lower.ends_with("ss")) {
    a.upos = "NOUN";
    a.lemma = lower.substr(0, lower.size() - 1);
    a.feats = "Number=Plur";
  } else {
    a.upos = "NOUN";
    a.feats = "Number=Sing";
  }
  return a;
}

bool is_subject_pronoun(const TokenAnnotation& a) {
  if (a.upos != "PRON") return false;
  auto f = feature_map(a.feats);
  if (f.count("Poss")) return false;
  auto c = f.find("Case");
  return c == f.end() || c->second == "Nom";
}

bool is_modal_or_do(const TokenAnnotation& a) {
  static const char* kModals[] = {"will", "would", "can", "could", "should", "must", "may", "might"};
  const std::string l = to_lower(a.token);
  for (const char* m : kModals)
    if (l == m) return true;
  return l == "do" || l == "does" || l == "did";
}

const lexicon::Reading* pick(const std::vector<lexicon::Reading>& rs, const std::string& upos,
                             const std::string& feats_hint = "") {
  const lexicon::Reading* best = nullptr;
  for (const auto& r : rs) {
    if (r.upos != upos) continue;
    if (!feats_hint.empty() && r.feats == feats_hint) return &r;
    if (!best) best = &r;
  }
  return best;
}

bool has_upos(const std::vector<lexicon::Reading>& rs, const std::string& upos) {
  return std::any_of(rs.begin(), rs.end(), [&](const auto& r) { return r.upos == upos; });
}

void assign_dependencies(std::vector<TokenAnnotation>& out) {
  // Clause-local heuristic labelling; only relation labels are produced.
  std::size_t i = 0;
  while (i < out.size()) {
    std::size_t end = i;
    while (end < out.size() && !(out[end].upos == "PUNCT" && (out[end].token == "." || out[end].token == "!" ||
                                                              out[end].token == "?")))
      ++end;
    // [i, end) is a sentence; out[end] (if any) is its final punctuation.
    bool have_root = false;
    bool predicate_seen = false;
    bool after_cc = false, after_sconj = false;
    std::string prev_content;  // upos of previous non-det/adj token
    for (std::size_t t = i; t < end; ++t) {
      auto& a = out[t];
      const std::string next_upos = t + 1 < end ? out[t + 1].upos : "";
      const std::string prev_upos = t > i ? out[t - 1].upos : "";
      if (a.upos == "PUNCT") {
        a.deprel = "punct";
        if (a.token == ",") predicate_seen = false;
      } else if (a.upos == "DET") {
        a.deprel = "det";
      } else if (a.upos == "NUM") {
        a.deprel = "nummod";
      } else if (a.upos == "ADJ") {
        if (next_upos == "NOUN" || next_upos == "ADJ" || next_upos == "PROPN") {
          a.deprel = "amod";
        } else if (!have_root) {
          a.deprel = "root";
          have_root = predicate_seen = true;
        } else {
          a.deprel = after_cc ? "conj" : "xcomp";
        }
      } else if (a.upos == "ADV") {
        a.deprel = "advmod";
      } else if (a.upos == "INTJ") {
        a.deprel = "discourse";
      } else if (a.upos == "CCONJ") {
        a.deprel = "cc";
        after_cc = true;
        predicate_seen = false;
      } else if (a.upos == "SCONJ") {
        a.deprel = "mark";
        after_sconj = true;
        predicate_seen = false;
      } else if (a.upos == "PART") {
        a.deprel = a.lemma == "to" ? "mark" : "advmod";
      } else if (a.upos == "ADP") {
        bool nominal_follows = false;
        for (std::size_t u = t + 1; u < end && u < t + 4; ++u) {
          const auto& p = out[u].upos;
          if (p == "NOUN" || p == "PRON" || p == "PROPN" || p == "NUM") {
            nominal_follows = true;
            break;
          }
          if (p != "DET" && p != "ADJ") break;
        }
        a.deprel = nominal_follows ? "case" : "compound";
      } else if (a.upos == "AUX") {
        bool verb_follows = false;
        for (std::size_t u = t + 1; u < end; ++u) {
          if (out[u].upos == "ADV" || out[u].upos == "PART") continue;
          verb_follows = out[u].upos == "VERB" || out[u].upos == "AUX";
          break;
        }
        a.deprel = (a.lemma == "be" && !verb_follows) ? "cop" : "aux";
      } else if (a.upos == "VERB") {
        if (prev_upos == "PART" && out[t - 1].lemma == "to") {
          a.deprel = "xcomp";
        } else if (!have_root) {
          a.deprel = "root";
          have_root = true;
        } else if (after_sconj) {
          a.deprel = "advcl";
        } else if (after_cc) {
          a.deprel = "conj";
        } else if (a.feats == "VerbForm=Ger") {
          a.deprel = "xcomp";
        } else {
          a.deprel = "parataxis";
        }
        predicate_seen = true;
        after_cc = after_sconj = false;
      } else if (a.upos == "NOUN" || a.upos == "PROPN" || a.upos == "PRON") {
        auto f = feature_map(a.feats);
        if (a.lemma == "there" && (next_upos == "AUX" || next_upos == "VERB")) {
          a.deprel = "expl";
        } else if (f.count("Poss")) {
          a.deprel = "nmod";
        } else if (next_upos == "NOUN" && a.upos == "NOUN") {
          a.deprel = "compound";
        } else if (prev_content == "ADP") {
          // Find the token the preposition hangs off.
          std::size_t u = t;
          while (u > i && out[u - 1].upos != "ADP") --u;
          bool nominal_head = u >= i + 2 && (out[u - 2].upos == "NOUN" || out[u - 2].upos == "PROPN");
          a.deprel = nominal_head ? "nmod" : "obl";
        } else if (!predicate_seen) {
          bool copular_predicate = t > i && out[t - 1].deprel == "cop";
          for (std::size_t u = t; u > i && !copular_predicate; --u) {
            if (out[u - 1].upos == "DET" || out[u - 1].upos == "ADJ" || out[u - 1].upos == "NUM") continue;
            copular_predicate = out[u - 1].deprel == "cop";
            break;
          }
          if (copular_predicate && !have_root) {
            a.deprel = "root";
            have_root = predicate_seen = true;
          } else {
            a.deprel = f.count("Case") && f["Case"] == "Acc" ? "obj" : "nsubj";
          }
        } else if (prev_content == "VERB" && t + 1 < end &&
                   (out[t + 1].upos == "DET" || out[t + 1].upos == "NOUN") && a.upos != "NOUN") {
          a.deprel = "iobj";
        } else {
          a.deprel = "obj";
        }
      } else {
        a.deprel = "dep";
      }
      if (a.upos != "DET" && a.upos != "ADJ" && a.upos != "NUM" && a.upos != "ADV") prev_content = a.upos;
    }
    if (end < out.size()) out[end].deprel = "punct";
    i = end + 1;
  }
}

}  // namespace

std::vector<std::string> feature_pairs(const std::string& feats) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < feats.size()) {
    std::size_t bar = feats.find('|', start);
    if (bar == std::string::npos) bar = feats.size();
    if (bar > start) out.push_back(feats.substr(start, bar - start));
    start = bar + 1;
  }
  return out;
}

std::map<std::string, std::string> feature_map(const std::string& feats) {
  std::map<std::string, std::string> m;
  for (const auto& p : feature_pairs(feats)) {
    auto eq = p.find('=');
    if (eq == std::string::npos) continue;
    m[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return m;
}

std::vector<TokenAnnotation> RuleTagger::annotate(const std::vector<std::string>& tokens) const {
  std::vector<TokenAnnotation> out;
  out.reserve(tokens.size());
  bool sentence_initial = true;
  bool clause_has_verb = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const std::string lower = to_lower(tok);
    TokenAnnotation a{tok, "", lower, "", ""};
    const auto& rs = lexicon::readings(lower);
    const TokenAnnotation* prev = out.empty() ? nullptr : &out.back();
    const std::string next_lower = i + 1 < tokens.size() ? to_lower(tokens[i + 1]) : "";
    const auto& next_rs = lexicon::readings(next_lower);

    if (is_punct_token(tok) && tok != "'") {
      a.upos = "PUNCT";
    } else if (rs.empty()) {
      a = guess_oov(tok, sentence_initial);
    } else {
      const lexicon::Reading* chosen = &rs.front();
      const bool verb_context =
          prev && (is_subject_pronoun(*prev) || prev->upos == "AUX" || prev->upos == "PART" ||
                   (prev->upos == "ADV" && prev->lemma != "very"));
      const bool noun_context = prev && (prev->upos == "DET" || prev->upos == "ADJ" || prev->upos == "NUM" ||
                                         (prev->upos == "PRON" && feature_map(prev->feats).count("Poss")) ||
                                         prev->upos == "ADP");
      if (lower == "to") {
        // Infinitive marker only when the next word is unambiguously verbal.
        const bool verbal_next = has_upos(next_rs, "VERB") && !has_upos(next_rs, "NOUN") &&
                                 !has_upos(next_rs, "DET") && !has_upos(next_rs, "PRON");
        chosen = verbal_next ? pick(rs, "PART") : pick(rs, "ADP");
      } else if (lower == "that") {
        chosen = (has_upos(next_rs, "NOUN") || has_upos(next_rs, "ADJ")) ? pick(rs, "DET") : pick(rs, "SCONJ");
      } else if (has_upos(rs, "VERB") &&
                 (verb_context || (prev && (prev->upos == "NOUN" || prev->upos == "PROPN") &&
                                   (!has_upos(rs, "NOUN") || !clause_has_verb)))) {
        // A noun followed by a noun/verb form is subject + verb unless the
        // clause already has its verb ("plays video games").
        chosen = pick(rs, "VERB");
      } else if (noun_context && has_upos(rs, "NOUN")) {
        chosen = pick(rs, "NOUN");
      } else if (has_upos(rs, "VERB") && !has_upos(rs, "NOUN") && !has_upos(rs, "ADP") && !has_upos(rs, "ADV") &&
                 !has_upos(rs, "ADJ")) {
        chosen = pick(rs, "VERB");
      }
      if (chosen && chosen->upos == "VERB") {
        // Base forms: infinitive after "to"/modals/do-support, finite present otherwise.
        const bool want_inf = prev && ((prev->upos == "PART" && prev->lemma == "to") || is_modal_or_do(*prev) ||
                                       prev->lemma == "not");
        const std::string hint = want_inf ? "VerbForm=Inf" : "Mood=Ind|Tense=Pres|VerbForm=Fin";
        if (const auto* r = pick(rs, "VERB", hint); r && r->lemma == chosen->lemma &&
                                                    (r->feats == "VerbForm=Inf" ||
                                                     r->feats == "Mood=Ind|Tense=Pres|VerbForm=Fin"))
          chosen = r;
        // Past participle after a form of have/be when the form is ambiguous.
        if (prev && (prev->lemma == "have" || prev->lemma == "be"))
          if (const auto* r = pick(rs, "VERB", "Tense=Past|VerbForm=Part"); r) chosen = r;
      }
      if (!chosen) chosen = &rs.front();
      a.upos = chosen->upos;
      a.lemma = chosen->lemma;
      a.feats = chosen->feats;
    }
    a.token = tok;
    if (a.upos == "VERB" || a.upos == "AUX") clause_has_verb = true;
    if (a.upos == "PUNCT" || a.upos == "CCONJ" || a.upos == "SCONJ") clause_has_verb = false;
    out.push_back(std::move(a));
    sentence_initial = tok == "." || tok == "!" || tok == "?";
  }
  assign_dependencies(out);
  return out;
}

std::unique_ptr<SyntacticAnnotationBackend> make_syntax_backend(const std::string& name) {
  if (name == "rules") return std::make_unique<RuleTagger>();
  throw ConfigError("unknown syntax backend '" + name + "' (available: rules)");
}

const std::vector<std::string>& universal_pos_tags() {
  static const std::vector<std::string> tags = {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
                                                "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return tags;
}

const std::vector<std::string>& universal_dependency_relations() {
  static const std::vector<std::string> rels = {
      "acl",   "advcl",  "advmod",    "amod",       "appos", "aux",   "case",     "cc",     "ccomp",     "clf",
      "compound", "conj", "cop",      "csubj",      "dep",   "det",   "discourse", "dislocated", "expl", "fixed",
      "flat",  "goeswith", "iobj",    "list",       "mark",  "nmod",  "nsubj",    "nummod", "obj",       "obl",
      "orphan", "parataxis", "punct", "reparandum", "root",  "vocative", "xcomp"};
  return rels;
}

int SyntaxSchema::pos_index(const std::string& upos) const {
  auto it = std::find(pos_labels.begin(), pos_labels.end(), upos);
  return static_cast<int>(it == pos_labels.end() ? pos_labels.size() : it - pos_labels.begin());
}

int SyntaxSchema::dep_index(const std::string& rel) const {
  // Subtypes ("nmod:poss") fall back to their universal head.
  std::string base = rel.substr(0, rel.find(':'));
  auto it = std::find(dep_labels.begin(), dep_labels.end(), base);
  return kPosBlock + static_cast<int>(it == dep_labels.end() ? dep_labels.size() : it - dep_labels.begin());
}

int SyntaxSchema::morph_index(const std::string& pair) const {
  auto it = std::find(morph_labels.begin(), morph_labels.end(), pair);
  if (it == morph_labels.end()) return kDim - 1;
  return kPosBlock + kDepBlock + static_cast<int>(it - morph_labels.begin());
}

nlohmann::json SyntaxSchema::to_json() const {
  return {{"dim", kDim},
          {"pos_block", kPosBlock},
          {"dep_block", kDepBlock},
          {"morph_block", kMorphBlock},
          {"pos", pos_labels},
          {"dep", dep_labels},
          {"morph", morph_labels}};
}

SyntaxSchema SyntaxSchema::from_json(const nlohmann::json& j) {
  if (j.at("dim").get<int>() != kDim || j.at("pos_block").get<int>() != kPosBlock ||
      j.at("dep_block").get<int>() != kDepBlock)
    throw CompatibilityError("syntax schema layout differs from this build");
  SyntaxSchema s;
  s.pos_labels = j.at("pos").get<std::vector<std::string>>();
  s.dep_labels = j.at("dep").get<std::vector<std::string>>();
  s.morph_labels = j.at("morph").get<std::vector<std::string>>();
  if (static_cast<int>(s.pos_labels.size()) != kPosBlock - 1 || static_cast<int>(s.dep_labels.size()) != kDepBlock - 1 ||
      static_cast<int>(s.morph_labels.size()) > kMorphBlock - 1)
    throw CompatibilityError("syntax schema inventory sizes do not match the 247-D layout");
  return s;
}

std::string SyntaxSchema::fingerprint() const { return hex64(fnv1a(to_json().dump())); }

SyntaxSchema freeze_syntax_schema(const std::vector<std::vector<TokenAnnotation>>& training) {
  SyntaxSchema s;
  s.pos_labels = universal_pos_tags();
  s.dep_labels = universal_dependency_relations();
  std::unordered_map<std::string, long> counts;
  for (const auto& sent : training)
    for (const auto& a : sent)
      for (const auto& p : feature_pairs(a.feats)) ++counts[p];
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  const std::size_t keep = std::min<std::size_t>(ranked.size(), SyntaxSchema::kMorphBlock - 1);
  for (std::size_t i = 0; i < keep; ++i) s.morph_labels.push_back(ranked[i].first);
  return s;
}

Eigen::MatrixXd encode_syntax(const SyntaxSchema& schema, const std::vector<TokenAnnotation>& annotations) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(annotations.size()), SyntaxSchema::kDim);
  for (std::size_t t = 0; t < annotations.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const auto& a = annotations[t];
    m(row, schema.pos_index(a.upos)) = 1.0;
    m(row, schema.dep_index(a.deprel)) = 1.0;
    for (const auto& p : feature_pairs(a.feats)) m(row, schema.morph_index(p)) = 1.0;
  }
  return m;
}

Eigen::MatrixXd syntax_features(const SyntacticAnnotationBackend& backend, const SyntaxSchema& schema,
                                const std::string& transcript) {
  auto tokens = tokenize(transcript);
  if (tokens.empty()) throw InputError("syntax_features: empty transcript");
  auto annotations = backend.annotate(tokens);
  if (annotations.size() != tokens.size())
    throw AnnotationError("syntax backend '" + backend.name() + "' returned " + std::to_string(annotations.size()) +
                          " annotations for " + std::to_string(tokens.size()) + " tokens");
  return encode_syntax(schema, annotations);
}

}  // namespace asa
