#include "asa/splitting.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "asa/common.hpp"
#include "asa/http_client.hpp"
#include "asa/lexicon.hpp"

namespace asa {

namespace {

constexpr const char* kPreamble =
    "You are a helpful assistant. You are given several questions and a single consolidated answer. "
    "The answer contains the information needed to respond to each question. Your task: For each "
    "question below, please provide the relevant text from the answer. Only output what is found in "
    "the answer.";

constexpr const char* kQuestionsHeader = "Questions:";
constexpr const char* kAnswerHeader = "Answer:";

std::string single_line(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '\n' || c == '\r') c = ' ';
  return out;
}

bool parse_header(const std::string& line, char tag, std::size_t& index, std::string& rest) {
  std::size_t p = 0;
  while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
  if (line.compare(p, 3, kSegmentDelimiter) != 0) return false;
  p += 3;
  while (p < line.size() && line[p] == ' ') ++p;
  if (p >= line.size() || line[p] != tag) return false;
  ++p;
  std::size_t digits_start = p;
  while (p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
  if (p == digits_start || p - digits_start > 3) return false;
  index = static_cast<std::size_t>(std::stoul(line.substr(digits_start, p - digits_start)));
  while (p < line.size() && line[p] == ' ') ++p;
  if (p >= line.size() || line[p] != ':') return false;
  rest = line.substr(p + 1);
  return true;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::set<std::string> content_lemmas(const std::string& text) {
  std::set<std::string> out;
  for (const auto& tok : tokenize(text)) {
    if (is_punct_token(tok)) continue;
    std::string lower = to_lower(tok);
    if (lexicon::is_stopword(lower)) continue;
    const auto& rs = lexicon::readings(lower);
    out.insert(rs.empty() ? lower : to_lower(rs.front().lemma));
  }
  return out;
}

bool is_no_answer(const std::string& content) {
  std::string t = trim(content);
  while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
  return to_lower(t) == to_lower(kNoAnswerMarker);
}

void set_grounding(SplitAlignment& a, const std::string& source, bool strict) {
  a.grounded.assign(a.segments.size(), true);
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    a.grounded[i] = is_grounded(a.segments[i], source);
    if (strict && !a.grounded[i]) {
      a.segments[i].clear();
      a.grounded[i] = true;
    }
  }
}

}  // namespace

HttpTextGenerator::HttpTextGenerator(std::string endpoint, int timeout_s)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {
  parse_endpoint(endpoint_);
}

std::string HttpTextGenerator::generate(const std::string& prompt, int max_tokens, double temperature) {
  nlohmann::json body{{"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", temperature}};
  auto reply = post_json(endpoint_, body, timeout_s_);
  if (!reply.is_object() || !reply.contains("text") || !reply.at("text").is_string())
    throw TransportError("generation endpoint reply lacks a string 'text' field");
  return reply.at("text").get<std::string>();
}

std::string FallbackSplitGenerator::generate(const std::string& prompt, int, double) {
  ParsedPrompt p = parse_prompt(prompt);
  return format_segments(fallback_split(p.questions, p.answer_text).segments);
}

std::string escape_prompt_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\\' || c == '#') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string unescape_prompt_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size() && (text[i + 1] == '\\' || text[i + 1] == '#')) ++i;
    out.push_back(text[i]);
  }
  return out;
}

std::string build_prompt(const std::vector<std::string>& questions, const std::string& answer_text,
                         bool reinforce) {
  if (questions.empty()) throw InputError("build_prompt: no questions");
  if (trim(answer_text).empty()) throw InputError("build_prompt: empty answer");
  const std::size_t k = questions.size();
  std::ostringstream p;
  p << kPreamble << "\n\n";
  p << "Format instructions:\n";
  p << "- Reply with exactly " << k << (k == 1 ? " section" : " sections")
    << ", one per question, in question order.\n";
  p << "- Start each section on its own line with the header \"" << kSegmentDelimiter
    << " A<n>:\" where <n> is the question number.\n";
  p << "- After the header, copy the relevant text from the answer word for word.\n";
  p << "- If the answer contains nothing relevant to a question, write " << kNoAnswerMarker
    << " after its header.\n";
  p << "- Do not write anything else.\n";
  if (reinforce) {
    p << "IMPORTANT: your previous reply did not follow this format. Output exactly " << k
      << (k == 1 ? " section" : " sections") << " and nothing else.\n";
  }
  p << "\n" << kQuestionsHeader << "\n";
  for (std::size_t i = 0; i < k; ++i)
    p << kSegmentDelimiter << " Q" << (i + 1) << ": " << escape_prompt_text(single_line(questions[i])) << "\n";
  p << "\n" << kAnswerHeader << "\n" << escape_prompt_text(answer_text);
  return p.str();
}

ParsedPrompt parse_prompt(const std::string& prompt) {
  const auto lines = lines_of(prompt);
  std::size_t i = 0;
  while (i < lines.size() && lines[i] != kQuestionsHeader) ++i;
  if (i == lines.size()) throw ParseError("prompt has no questions block");
  ++i;
  ParsedPrompt out;
  for (; i < lines.size() && lines[i] != kAnswerHeader; ++i) {
    std::size_t idx = 0;
    std::string rest;
    if (!parse_header(lines[i], 'Q', idx, rest)) continue;
    if (idx != out.questions.size() + 1) throw ParseError("prompt questions out of order");
    out.questions.push_back(unescape_prompt_text(trim(rest)));
  }
  if (i == lines.size()) throw ParseError("prompt has no answer block");
  const auto answer_pos = prompt.find(std::string("\n") + kAnswerHeader + "\n");
  out.answer_text = unescape_prompt_text(prompt.substr(answer_pos + std::string(kAnswerHeader).size() + 2));
  if (out.questions.empty()) throw ParseError("prompt lists no questions");
  return out;
}

bool parse_segments(const std::string& output, std::size_t k, std::vector<std::string>& segments) {
  std::vector<std::string> found(k);
  std::vector<bool> seen(k, false);
  long current = -1;
  std::size_t sections = 0;
  for (const auto& line : lines_of(output)) {
    std::size_t idx = 0;
    std::string rest;
    if (parse_header(line, 'A', idx, rest)) {
      ++sections;
      if (idx < 1 || idx > k || seen[idx - 1]) return false;
      seen[idx - 1] = true;
      current = static_cast<long>(idx - 1);
      found[current] = trim(rest);
      continue;
    }
    // Text before the first header is chatter and is ignored.
    if (current < 0) continue;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (!found[current].empty()) found[current] += ' ';
    found[current] += t;
  }
  if (sections != k) return false;
  for (auto& f : found) {
    f = unescape_prompt_text(f);
    if (is_no_answer(f)) f.clear();
  }
  segments = std::move(found);
  return true;
}

std::string format_segments(const std::vector<std::string>& segments) {
  std::ostringstream out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out << kSegmentDelimiter << " A" << (i + 1) << ": "
        << (trim(segments[i]).empty() ? std::string(kNoAnswerMarker) : escape_prompt_text(single_line(segments[i])))
        << "\n";
  }
  return out.str();
}

bool is_grounded(const std::string& segment, const std::string& source) {
  if (trim(segment).empty()) return true;
  const std::string folded_source = fold_text(source);
  for (const auto& sentence : split_sentences(segment))
    if (folded_source.find(fold_text(sentence)) == std::string::npos) return false;
  return true;
}

SplitAlignment split_response(SplitterBackend& backend, const std::vector<std::string>& questions,
                              const std::string& answer_text, SplitSource source) {
  if (questions.empty()) throw InputError("split_response: no questions");
  SplitAlignment a;
  a.source = source;
  if (trim(answer_text).empty()) {
    a.segments.assign(questions.size(), "");
    a.grounded.assign(questions.size(), true);
    return a;
  }
  if (!backend.generator) throw ConfigError("splitter backend has no generator");
  std::string raw;
  for (int attempt = 0; attempt < 2; ++attempt) {
    raw = backend.generator->generate(build_prompt(questions, answer_text, attempt > 0), backend.max_tokens,
                                      backend.temperature);
    if (parse_segments(raw, questions.size(), a.segments)) {
      set_grounding(a, answer_text, backend.strict);
      return a;
    }
  }
  throw SplittingError("splitter output does not contain exactly " + std::to_string(questions.size()) +
                           " answer sections after one retry",
                       raw);
}

int lexical_overlap(const std::string& sentence, const std::string& question) {
  const auto s = content_lemmas(sentence);
  const auto q = content_lemmas(question);
  int n = 0;
  for (const auto& w : s) n += static_cast<int>(q.count(w));
  return n;
}

SplitAlignment fallback_split(const std::vector<std::string>& questions, const std::string& answer_text,
                              SplitSource source) {
  if (questions.empty()) throw InputError("fallback_split: no questions");
  const std::size_t k = questions.size();
  SplitAlignment a;
  a.source = source;
  a.segments.assign(k, "");
  const auto sentences = split_sentences(answer_text);
  const std::size_t n = sentences.size();
  std::vector<std::set<std::string>> q_lemmas;
  for (const auto& q : questions) q_lemmas.push_back(content_lemmas(q));
  for (std::size_t i = 0; i < n; ++i) {
    const auto s_lemmas = content_lemmas(sentences[i]);
    std::size_t best = 0;
    int best_score = 0;
    for (std::size_t j = 0; j < k; ++j) {
      int score = 0;
      for (const auto& w : s_lemmas) score += static_cast<int>(q_lemmas[j].count(w));
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best_score == 0) best = std::min(k - 1, i * k / n);
    if (!a.segments[best].empty()) a.segments[best] += ' ';
    a.segments[best] += sentences[i];
  }
  a.grounded.assign(k, true);
  for (std::size_t j = 0; j < k; ++j) a.grounded[j] = is_grounded(a.segments[j], answer_text);
  return a;
}

}  // namespace asa
