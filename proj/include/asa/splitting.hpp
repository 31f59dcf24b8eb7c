#pragma once

#include <memory>
#include <string>
#include <vector>

namespace asa {

/// Text in, text out. Implementations must decode deterministically at
/// temperature 0.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt, int max_tokens, double temperature) = 0;
};

/// `POST <endpoint>` with {"prompt", "max_tokens", "temperature"}; reads
/// the "text" field of the reply.
class HttpTextGenerator final : public TextGenerator {
 public:
  explicit HttpTextGenerator(std::string endpoint, int timeout_s = 120);
  std::string generate(const std::string& prompt, int max_tokens, double temperature) override;

 private:
  std::string endpoint_;
  int timeout_s_;
};

/// Process-local generator that answers splitting prompts by running
/// fallback_split on the prompt's own questions and answer. Used wherever no
/// instruction model is configured.
class FallbackSplitGenerator final : public TextGenerator {
 public:
  std::string generate(const std::string& prompt, int max_tokens, double temperature) override;
};

struct SplitterBackend {
  std::shared_ptr<TextGenerator> generator;
  int max_tokens = 1024;
  double temperature = 0.0;
  /// Replace ungrounded segments with "" instead of only flagging them.
  bool strict = false;
};

enum class SplitSource { kResponse, kExemplar };

struct SplitAlignment {
  SplitSource source = SplitSource::kResponse;
  std::vector<std::string> segments;  // one per question, "" = no answer
  std::vector<bool> grounded;
};

inline constexpr const char* kSegmentDelimiter = "###";
inline constexpr const char* kNoAnswerMarker = "NO_ANSWER";

/// Escapes '\' and '#' with a backslash so user text can never forge a
/// section header.
std::string escape_prompt_text(const std::string& text);
std::string unescape_prompt_text(const std::string& text);

/// Instruction prompt for the splitting model. `reinforce` adds the stricter
/// format reminder used on the retry.
std::string build_prompt(const std::vector<std::string>& questions, const std::string& answer_text,
                         bool reinforce = false);

struct ParsedPrompt {
  std::vector<std::string> questions;
  std::string answer_text;
};
/// Inverse of build_prompt. Throws ParseError on foreign text.
ParsedPrompt parse_prompt(const std::string& prompt);

/// Parses "### A<j>:" sections. Returns false when the output does not hold
/// exactly one section for each of the k questions.
bool parse_segments(const std::string& output, std::size_t k, std::vector<std::string>& segments);

/// Formats segments in the reply protocol (inverse of parse_segments).
std::string format_segments(const std::vector<std::string>& segments);

/// Each sentence of `segment` appears, after whitespace/case folding, as a
/// contiguous substring of `source`. Empty segments are grounded.
bool is_grounded(const std::string& segment, const std::string& source);

/// Calls the backend, retries once with a reinforced prompt, and validates.
/// Throws SplittingError (carrying the raw output) when both attempts are
/// unparseable; TransportError propagates from the generator.
SplitAlignment split_response(SplitterBackend& backend, const std::vector<std::string>& questions,
                              const std::string& answer_text, SplitSource source = SplitSource::kResponse);

/// Deterministic splitter: each sentence goes to the question with the
/// largest content-word overlap (ties to the earlier question). Sentences
/// with no overlap with any question are placed by position,
/// question floor(i * k / n) for sentence i of n.
SplitAlignment fallback_split(const std::vector<std::string>& questions, const std::string& answer_text,
                              SplitSource source = SplitSource::kResponse);

/// Content-word overlap between a sentence and a question (lemmatized,
/// stopwords removed, set semantics).
int lexical_overlap(const std::string& sentence, const std::string& question);

}  // namespace asa
