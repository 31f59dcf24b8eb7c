#include "asa/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace asa {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  // Bytes >= 0x80 are UTF-8 continuation/lead bytes; keep them in words.
  return std::isalnum(u) != 0 || u >= 0x80;
}

}  // namespace

std::string error_kind(const std::exception& e) {
#define ASA_KIND(Name) \
  if (dynamic_cast<const Name*>(&e)) return #Name;
  ASA_KIND(ParseError)
  ASA_KIND(ReferentialIntegrityError)
  ASA_KIND(InsufficientDataError)
  ASA_KIND(InputError)
  ASA_KIND(ConfigError)
  ASA_KIND(CompatibilityError)
  ASA_KIND(ShapeError)
  ASA_KIND(IoError)
  ASA_KIND(TransportError)
  ASA_KIND(EmbeddingError)
  ASA_KIND(MediaError)
  ASA_KIND(FitError)
  ASA_KIND(LookupError)
  ASA_KIND(CorrectionError)
  ASA_KIND(TaxonomyError)
  ASA_KIND(AnnotationError)
  ASA_KIND(AlignmentError)
  ASA_KIND(NumericError)
  ASA_KIND(SplittingError)
  ASA_KIND(ValidationError)
#undef ASA_KIND
  return "Error";
}

int exit_code_for(const std::exception& e) { return dynamic_cast<const ValidationError*>(&e) ? 1 : 2; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string fold_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (is_space(c)) {
      flush();
    } else if (is_word_char(c)) {
      cur.push_back(c);
    } else if (c == '\'' && !cur.empty() && i + 1 < s.size() && is_word_char(s[i + 1])) {
      cur.push_back(c);
    } else {
      flush();
      out.emplace_back(1, c);
    }
  }
  flush();
  return out;
}

bool is_punct_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token)
    if (is_word_char(c)) return false;
  return true;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    if (j == text.size() || is_space(text[j])) {
      std::string sentence = trim(text.substr(start, j - start));
      if (!sentence.empty()) out.push_back(std::move(sentence));
      start = j;
      i = j - 1;
    }
  }
  std::string tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::uniform_int(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace asa
