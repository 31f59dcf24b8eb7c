#include "asa/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asa/common.hpp"
#include "asa/lexicon.hpp"

namespace asa {

namespace {

bool has_reading(const std::string& lower, const std::string& upos, const std::string& feats = "") {
  for (const auto& r : lexicon::readings(lower))
    if (r.upos == upos && (feats.empty() || r.feats == feats)) return true;
  return false;
}

bool only_upos(const std::string& lower, const std::string& upos) {
  const auto& rs = lexicon::readings(lower);
  return !rs.empty() && std::all_of(rs.begin(), rs.end(), [&](const auto& r) { return r.upos == upos; });
}

std::string verb_lemma_if_base(const std::string& lower) {
  for (const auto& r : lexicon::readings(lower))
    if (r.upos == "VERB" && r.feats == "Mood=Ind|Tense=Pres|VerbForm=Fin" && r.lemma == lower) return r.lemma;
  return {};
}

bool is_countable_singular(const std::string& lower) {
  const auto& rs = lexicon::readings(lower);
  if (rs.empty() || rs.front().upos != "NOUN" || rs.front().feats != "Number=Sing") return false;
  auto plural = lexicon::noun_plural(lower);
  return plural && *plural != lower;
}

// Lowercased output token `back` positions from the end, skipping over
// adjective-only words ("two white" -> "two").
std::string skip_adjectives_back(const std::vector<std::string>& out, std::size_t back) {
  std::size_t k = back;
  while (k <= out.size()) {
    const std::string w = to_lower(out[out.size() - k]);
    if (!only_upos(w, "ADJ")) return w;
    ++k;
  }
  return {};
}

// Adjectives and singular nouns followed by an unambiguous plural noun.
bool plural_head_follows(const std::vector<std::string>& lower, std::size_t from) {
  for (std::size_t j = from; j < lower.size(); ++j) {
    const auto& rs = lexicon::readings(lower[j]);
    if (rs.empty()) return false;
    if (only_upos(lower[j], "NOUN")) {
      if (rs.front().feats == "Number=Plur") return true;
      continue;
    }
    if (!only_upos(lower[j], "ADJ")) return false;
  }
  return false;
}

std::string match_case(const std::string& model, const std::string& word) {
  if (model.empty() || word.empty() || !std::isupper(static_cast<unsigned char>(model[0]))) return word;
  std::string out = word;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string indefinite_article_for(const std::string& next) {
  const std::string l = to_lower(next);
  if (l.starts_with("hour") || l.starts_with("honest")) return "an";
  if (l.starts_with("uni") || l.starts_with("use") || l.starts_with("one") || l.starts_with("eu")) return "a";
  return !l.empty() && std::string("aeiou").find(l[0]) != std::string::npos ? "an" : "a";
}

bool is_sentence_end(const std::string& t) { return t == "." || t == "!" || t == "?"; }

const std::set<std::string>& determinerless_nouns() {
  static const std::set<std::string> s = {"home", "school", "time", "night", "work", "bed", "lunch", "breakfast",
                                          "dinner", "class", "weekend", "today", "yesterday", "tomorrow", "fun",
                                          "morning", "afternoon"};
  return s;
}

bool is_determiner_like(const std::string& lower) {
  const auto& rs = lexicon::readings(lower);
  for (const auto& r : rs) {
    if (r.upos == "DET" || r.upos == "NUM" || r.upos == "ADJ") return true;
    if (r.upos == "PRON" && r.feats.find("Poss=Yes") != std::string::npos) return true;
  }
  return false;
}

std::vector<PhraseRule> builtin_phrases() {
  return {
      {{"listen", "music"}, {"listen", "to", "music"}},
      {{"listens", "music"}, {"listens", "to", "music"}},
      {{"listening", "music"}, {"listening", "to", "music"}},
      {{"go", "to", "home"}, {"go", "home"}},
      {{"went", "to", "home"}, {"went", "home"}},
      {{"in", "the", "beach"}, {"on", "the", "beach"}},
      {{"discuss", "about"}, {"discuss"}},
      {{"married", "with"}, {"married", "to"}},
  };
}

std::size_t levenshtein_chars(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool alphabetic(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Category shared by a token range, taking the first token that has one.
std::string range_category(const std::vector<TokenAnnotation>& ann, std::size_t b, std::size_t e) {
  for (std::size_t i = b; i < e && i < ann.size(); ++i) {
    std::string c = pos_category(ann[i].upos);
    if (!c.empty()) return c;
  }
  return {};
}

std::string morphology_refinement(const std::string& category, const TokenAnnotation& r, const TokenAnnotation& c) {
  const auto fr = feature_map(r.feats);
  const auto fc = feature_map(c.feats);
  std::set<std::string> changed;
  for (const auto& [k, v] : fr) {
    auto it = fc.find(k);
    if (it == fc.end() || it->second != v) changed.insert(k);
  }
  for (const auto& [k, v] : fc)
    if (!fr.count(k)) changed.insert(k);

  if (category == "VERB") {
    if (changed.count("Tense")) return "TENSE";
    if (changed.count("Number") || changed.count("Person")) return "SVA";
    if (changed.count("VerbForm") || changed.count("Mood")) return "FORM";
  }
  if (category == "NOUN" && changed.count("Number")) return "NUM";
  if (category == "ADJ" && changed.count("Degree")) return "FORM";
  if (changed.empty()) return "FORM";
  // Remaining feature changes are spelled out, e.g. PRON:CASE.
  std::string out;
  for (const auto& f : changed) {
    if (!out.empty()) out += '+';
    out += upper(f);
  }
  return out;
}

}  // namespace

// --- rule-based correction ----------------------------------------------------

RuleGecBackend::RuleGecBackend(std::vector<PhraseRule> extra_rules) : phrases_(std::move(extra_rules)) {
  for (auto& r : phrases_)
    for (auto& t : r.pattern) t = to_lower(t);
  for (auto& r : builtin_phrases()) phrases_.push_back(std::move(r));
}

std::string RuleGecBackend::correct_text(const std::string& raw_text) {
  const auto in = tokenize(raw_text);
  std::vector<std::string> lower(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) lower[i] = to_lower(in[i]);

  // Sentences that carry a past-time adverbial.
  std::vector<bool> past_context(in.size(), false);
  for (std::size_t b = 0; b < in.size();) {
    std::size_t e = b;
    while (e < in.size() && !is_sentence_end(in[e])) ++e;
    bool past = false;
    for (std::size_t i = b; i < e; ++i) past = past || lower[i] == "yesterday" || lower[i] == "ago" || lower[i] == "last";
    for (std::size_t i = b; i < std::min(e + 1, in.size()); ++i) past_context[i] = past;
    b = e + 1;
  }

  std::vector<std::string> out;
  auto prev_lower = [&](std::size_t back) -> std::string {
    return out.size() >= back ? to_lower(out[out.size() - back]) : std::string{};
  };

  std::size_t i = 0;
  while (i < in.size()) {
    // Phrase table.
    bool matched = false;
    for (const auto& rule : phrases_) {
      if (rule.pattern.empty() || i + rule.pattern.size() > in.size()) continue;
      if (!std::equal(rule.pattern.begin(), rule.pattern.end(), lower.begin() + static_cast<std::ptrdiff_t>(i)))
        continue;
      for (std::size_t r = 0; r < rule.replacement.size(); ++r)
        out.push_back(r == 0 ? match_case(in[i], rule.replacement[r]) : rule.replacement[r]);
      i += rule.pattern.size();
      matched = true;
      break;
    }
    if (matched) continue;

    const std::string& tok = in[i];
    const std::string& low = lower[i];
    const std::string next = i + 1 < in.size() ? in[i + 1] : std::string{};
    const std::string p1 = prev_lower(1);
    const std::string p2 = prev_lower(2);

    // Immediate repetition of a word.
    if (!out.empty() && alphabetic(low) && low == p1) {
      ++i;
      continue;
    }
    // "more" before a synthetic comparative.
    if (low == "more" && has_reading(to_lower(next), "ADJ", "Degree=Cmp")) {
      ++i;
      continue;
    }
    // Indefinite article before a plural head ("a video games").
    if ((low == "a" || low == "an") && plural_head_follows(lower, i + 1)) {
      ++i;
      continue;
    }
    // a / an agreement.
    if ((low == "a" || low == "an") && !next.empty() && alphabetic(to_lower(next))) {
      out.push_back(match_case(tok, indefinite_article_for(next)));
      ++i;
      continue;
    }
    // Agreement of be with pronoun subjects.
    if (low == "is" || low == "are" || low == "am" || low == "was" || low == "were") {
      std::string fixed = low;
      if (p1 == "he" || p1 == "she" || p1 == "it") {
        if (low == "are" || low == "am") fixed = "is";
        if (low == "were") fixed = "was";
      } else if (p1 == "i") {
        if (low == "is" || low == "are") fixed = "am";
        if (low == "were") fixed = "was";
      } else if (p1 == "we" || p1 == "they" || p1 == "you") {
        if (low == "is" || low == "am") fixed = "are";
        if (low == "was") fixed = "were";
      }
      out.push_back(match_case(tok, fixed));
      ++i;
      continue;
    }
    // Base-form verbs: tense with past adverbials, agreement with 3sg subjects.
    if (const std::string lemma = verb_lemma_if_base(low); !lemma.empty()) {
      const auto forms = lexicon::verb_forms(lemma);
      const bool pronoun_subject = p1 == "i" || p1 == "you" || p1 == "we" || p1 == "they" || p1 == "he" ||
                                   p1 == "she" || p1 == "it";
      const std::string before_noun = skip_adjectives_back(out, 2);
      const bool third_subject = p1 == "he" || p1 == "she" || p1 == "it" ||
                                 (is_countable_singular(p1) &&
                                  (before_noun == "the" || before_noun == "a" || before_noun == "this"));
      if (forms && past_context[i] && (pronoun_subject || third_subject)) {
        out.push_back(match_case(tok, forms->past));
        ++i;
        continue;
      }
      if (forms && third_subject) {
        out.push_back(match_case(tok, forms->third_singular));
        ++i;
        continue;
      }
    }
    // Plural after a cardinal greater than one or "many".
    const std::string q = skip_adjectives_back(out, 1);
    if (is_countable_singular(low) &&
        (q == "two" || q == "three" || q == "four" || q == "five" || q == "six" || q == "seven" || q == "eight" ||
         q == "nine" || q == "ten" || q == "many" || q == "several" || q == "these" || q == "those")) {
      out.push_back(match_case(tok, *lexicon::noun_plural(low)));
      ++i;
      continue;
    }
    // Missing article before a bare singular count noun.
    if (is_countable_singular(low) && !determinerless_nouns().count(low) && !out.empty() &&
        !is_determiner_like(p1) && !plural_head_follows(lower, i + 1)) {
      const bool after_verb = only_upos(p1, "VERB") || p1 == "is" || p1 == "was";
      const bool after_prep =
          p1 == "in" || p1 == "on" || p1 == "at" || p1 == "near" || p1 == "under" || p1 == "behind" || p1 == "into";
      if (after_verb) {
        out.push_back(indefinite_article_for(tok));
      } else if (after_prep) {
        out.push_back("the");
      }
    }
    out.push_back(tok);
    ++i;
  }
  return detokenize(out);
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    const bool attach = t == "." || t == "," || t == "!" || t == "?" || t == ";" || t == ":" || t == "n't" ||
                        t == ")" || (t.size() > 1 && t[0] == '\'');
    if (!out.empty() && !attach && out.back() != '(') out.push_back(' ');
    out += t;
  }
  return out;
}

ServiceGecBackend::ServiceGecBackend(std::shared_ptr<TextGenerator> generator, std::vector<FewShotExample> few_shot,
                                     int max_tokens)
    : generator_(std::move(generator)), few_shot_(std::move(few_shot)), max_tokens_(max_tokens) {
  if (!generator_) throw ConfigError("GEC service backend needs a generator");
}

std::string build_gec_prompt(const std::vector<FewShotExample>& few_shot, const std::string& raw_text) {
  std::ostringstream p;
  p << "Correct the grammatical errors in the following transcript of spoken English. Keep the wording as "
       "close to the original as possible, do not add new content, and output only the corrected text.\n\n";
  for (const auto& [raw, corrected] : few_shot) p << "Input: " << raw << "\nOutput: " << corrected << "\n\n";
  p << "Input: " << raw_text << "\nOutput:";
  return p.str();
}

std::string ServiceGecBackend::correct_text(const std::string& raw_text) {
  return trim(generator_->generate(build_gec_prompt(few_shot_, raw_text), max_tokens_, 0.0));
}

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open few-shot file " + path.string());
  std::vector<FewShotExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.emplace_back(j.at("raw").get<std::string>(), j.at("corrected").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("few-shot line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string correct(GecBackend& backend, const std::string& raw_text) {
  if (trim(raw_text).empty()) throw InputError("correct: empty input text");
  std::string out = backend.correct_text(raw_text);
  if (trim(out).empty()) throw CorrectionError("correction backend returned empty text");
  return out;
}

// --- alignment -------------------------------------------------------------------

std::size_t EditSpan::cost() const {
  switch (op) {
    case EditOp::kInsert: return corr_end - corr_begin;
    case EditOp::kDelete: return raw_end - raw_begin;
    case EditOp::kSubstitute: return raw_end - raw_begin;
  }
  return 0;
}

std::size_t total_cost(const std::vector<EditSpan>& edits) {
  std::size_t c = 0;
  for (const auto& e : edits) c += e.cost();
  return c;
}

std::vector<EditSpan> align_edits(const std::vector<std::string>& raw_tokens,
                                  const std::vector<std::string>& corr_tokens) {
  const std::size_t n = raw_tokens.size(), m = corr_tokens.size();
  std::vector<std::string> a(n), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = to_lower(raw_tokens[i]);
  for (std::size_t j = 0; j < m; ++j) b[j] = to_lower(corr_tokens[j]);

  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j) + 1, at(i, j - 1) + 1, at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});

  // Backtrace; preference on ties: match, substitute, delete, insert.
  enum Step { kMatch, kSub, kDel, kIns };
  std::vector<Step> steps;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      steps.push_back(kMatch);
      --i, --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      steps.push_back(kSub);
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      steps.push_back(kDel);
      --i;
    } else {
      steps.push_back(kIns);
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());

  std::vector<EditSpan> spans;
  i = j = 0;
  for (Step s : steps) {
    if (s == kMatch) {
      ++i, ++j;
      continue;
    }
    const EditOp op = s == kSub ? EditOp::kSubstitute : (s == kDel ? EditOp::kDelete : EditOp::kInsert);
    const bool extends = !spans.empty() && spans.back().op == op && spans.back().raw_end == i && spans.back().corr_end == j;
    if (!extends) spans.push_back({i, i, j, j, op, ""});
    EditSpan& e = spans.back();
    if (s != kIns) e.raw_end = ++i;
    if (s != kDel) e.corr_end = ++j;
  }
  return spans;
}

// --- classification --------------------------------------------------------------

std::string pos_category(const std::string& upos) {
  static const std::map<std::string, std::string> m = {
      {"ADJ", "ADJ"},   {"ADP", "PREP"},  {"ADV", "ADV"},   {"AUX", "VERB"},  {"CCONJ", "CONJ"},
      {"SCONJ", "CONJ"}, {"DET", "DET"},  {"NOUN", "NOUN"}, {"PROPN", "NOUN"}, {"NUM", "NUM"},
      {"PART", "PART"}, {"PRON", "PRON"}, {"PUNCT", "PUNCT"}, {"VERB", "VERB"}};
  auto it = m.find(upos);
  return it == m.end() ? std::string{} : it->second;
}

std::string classify_edit(const EditSpan& edit, const std::vector<TokenAnnotation>& raw,
                          const std::vector<TokenAnnotation>& corr) {
  if (edit.raw_end > raw.size() || edit.corr_end > corr.size() || edit.raw_begin > edit.raw_end ||
      edit.corr_begin > edit.corr_end)
    throw InputError("classify_edit: annotations do not cover the edit");

  switch (edit.op) {
    case EditOp::kInsert: {
      std::string c = range_category(corr, edit.corr_begin, edit.corr_end);
      return c.empty() ? kOtherLabel : "M:" + c;
    }
    case EditOp::kDelete: {
      std::string c = range_category(raw, edit.raw_begin, edit.raw_end);
      return c.empty() ? kOtherLabel : "U:" + c;
    }
    case EditOp::kSubstitute: break;
  }

  const std::size_t len = edit.raw_end - edit.raw_begin;
  if (len > 1) {
    std::multiset<std::string> rs, cs;
    for (std::size_t k = edit.raw_begin; k < edit.raw_end; ++k) rs.insert(to_lower(raw[k].token));
    for (std::size_t k = edit.corr_begin; k < edit.corr_end; ++k) cs.insert(to_lower(corr[k].token));
    if (rs == cs) return "R:WO";
    std::string c = range_category(corr, edit.corr_begin, edit.corr_end);
    if (c.empty()) c = range_category(raw, edit.raw_begin, edit.raw_end);
    return c.empty() ? kOtherLabel : "R:" + c;
  }

  const TokenAnnotation& r = raw[edit.raw_begin];
  const TokenAnnotation& c = corr[edit.corr_begin];
  const std::string rl = to_lower(r.token), cl = to_lower(c.token);
  const std::string rcat = pos_category(r.upos), ccat = pos_category(c.upos);

  if (!ccat.empty() && !rcat.empty() && to_lower(r.lemma) == to_lower(c.lemma)) {
    if (rcat != ccat) return "R:MORPH";
    return "R:" + ccat + ":" + morphology_refinement(ccat, r, c);
  }
  if (alphabetic(rl) && alphabetic(cl) && !lexicon::in_vocabulary(rl)) {
    const double sim = 1.0 - static_cast<double>(levenshtein_chars(rl, cl)) / std::max(rl.size(), cl.size());
    if (sim >= 0.5) return "R:SPELL";
  }
  if (!ccat.empty()) return "R:" + ccat;
  if (!rcat.empty()) return "R:" + rcat;
  return kOtherLabel;
}

// --- taxonomy --------------------------------------------------------------------

ErrorTaxonomy::ErrorTaxonomy(std::vector<std::string> labels, int capacity)
    : labels_(std::move(labels)), capacity_(capacity) {
  if (capacity_ < 1) throw InputError("taxonomy capacity must be at least 1");
  if (static_cast<int>(labels_.size()) > capacity_) throw TaxonomyError("taxonomy has more labels than capacity");
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!index_.emplace(labels_[i], i).second) throw TaxonomyError("duplicate taxonomy label '" + labels_[i] + "'");
  if (!index_.count(kOtherLabel)) throw TaxonomyError("taxonomy lacks the OTHER label");
}

std::size_t ErrorTaxonomy::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw TaxonomyError("label '" + label + "' is not in the taxonomy");
  return it->second;
}

std::string ErrorTaxonomy::canonical(const std::string& label) const {
  return contains(label) ? label : std::string(kOtherLabel);
}

nlohmann::json ErrorTaxonomy::to_json() const { return {{"capacity", capacity_}, {"labels", labels_}}; }

ErrorTaxonomy ErrorTaxonomy::from_json(const nlohmann::json& j) {
  return ErrorTaxonomy(j.at("labels").get<std::vector<std::string>>(), j.at("capacity").get<int>());
}

std::string ErrorTaxonomy::fingerprint() const { return hex64(fnv1a(to_json().dump())); }

ErrorTaxonomy freeze_taxonomy(const std::vector<std::string>& training_edit_labels, int capacity) {
  if (capacity < 1) throw InputError("taxonomy capacity must be at least 1");
  std::map<std::string, long> counts;
  for (const auto& l : training_edit_labels)
    if (l != kOtherLabel) ++counts[l];
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(labels.size()) < capacity - 1; ++i)
    labels.push_back(ranked[i].first);
  labels.push_back(kOtherLabel);
  return ErrorTaxonomy(std::move(labels), capacity);
}

GrammarFeatureVector grammar_features(const ErrorTaxonomy& taxonomy, const std::vector<std::string>& edit_labels,
                                      const std::string& raw_text) {
  GrammarFeatureVector g;
  g.word_count = static_cast<int>(split_whitespace(raw_text).size());
  if (g.word_count == 0) throw InputError("grammar_features: raw text has no words");
  g.counts = Eigen::VectorXd::Zero(taxonomy.capacity());
  for (const auto& l : edit_labels) g.counts(static_cast<Eigen::Index>(taxonomy.index_of(l))) += 1.0;
  g.freqs = g.counts / static_cast<double>(g.word_count);
  return g;
}

GrammarAnalysis analyze_grammar(GecBackend& gec, const SyntacticAnnotationBackend& syntax,
                                const std::string& raw_text) {
  GrammarAnalysis a;
  a.raw_text = raw_text;
  a.corrected_text = correct(gec, raw_text);
  a.raw_tokens = tokenize(raw_text);
  a.corr_tokens = tokenize(a.corrected_text);
  a.edits = align_edits(a.raw_tokens, a.corr_tokens);
  if (!a.edits.empty()) {
    const auto raw_ann = syntax.annotate(a.raw_tokens);
    const auto corr_ann = syntax.annotate(a.corr_tokens);
    if (raw_ann.size() != a.raw_tokens.size() || corr_ann.size() != a.corr_tokens.size())
      throw AnnotationError("syntax backend did not annotate every token");
    for (auto& e : a.edits) e.error_type = classify_edit(e, raw_ann, corr_ann);
  }
  return a;
}

std::string to_m2(const GrammarAnalysis& analysis) {
  std::ostringstream out;
  out << "S " << join(analysis.raw_tokens, " ") << "\n";
  if (analysis.edits.empty()) out << "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n";
  for (const auto& e : analysis.edits) {
    std::vector<std::string> corr(analysis.corr_tokens.begin() + static_cast<std::ptrdiff_t>(e.corr_begin),
                                  analysis.corr_tokens.begin() + static_cast<std::ptrdiff_t>(e.corr_end));
    out << "A " << e.raw_begin << ' ' << e.raw_end << "|||" << (e.error_type.empty() ? kOtherLabel : e.error_type)
        << "|||" << (corr.empty() ? std::string("-NONE-") : join(corr, " ")) << "|||REQUIRED|||-NONE-|||0\n";
  }
  out << "\n";
  return out.str();
}

}  // namespace asa
