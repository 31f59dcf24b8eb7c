#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asa {

// ---------------------------------------------------------------------------
// Error hierarchy. Anything deriving from ValidationError is a problem with
// the caller's input or configuration (CLI exit code 1); everything else is
// a runtime failure (exit code 2).
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

#define ASA_DEFINE_ERROR(Name, Base)  \
  class Name : public Base {          \
   public:                            \
    using Base::Base;                 \
  };

ASA_DEFINE_ERROR(ParseError, ValidationError)
ASA_DEFINE_ERROR(ReferentialIntegrityError, ValidationError)
ASA_DEFINE_ERROR(InsufficientDataError, ValidationError)
ASA_DEFINE_ERROR(InputError, ValidationError)
ASA_DEFINE_ERROR(ConfigError, ValidationError)
ASA_DEFINE_ERROR(CompatibilityError, ValidationError)
ASA_DEFINE_ERROR(ShapeError, ValidationError)
ASA_DEFINE_ERROR(IoError, Error)
ASA_DEFINE_ERROR(TransportError, Error)
ASA_DEFINE_ERROR(EmbeddingError, Error)
ASA_DEFINE_ERROR(MediaError, Error)
ASA_DEFINE_ERROR(FitError, Error)
ASA_DEFINE_ERROR(LookupError, Error)
ASA_DEFINE_ERROR(CorrectionError, Error)
ASA_DEFINE_ERROR(TaxonomyError, Error)
ASA_DEFINE_ERROR(AnnotationError, Error)
ASA_DEFINE_ERROR(AlignmentError, Error)
ASA_DEFINE_ERROR(NumericError, Error)

#undef ASA_DEFINE_ERROR

/// Class name of an asa error ("MediaError"), "Error" for other exceptions.
std::string error_kind(const std::exception& e);

/// 1 for validation errors, 2 for everything else.
int exit_code_for(const std::exception& e);

/// Raised when the splitter backend keeps producing output that does not
/// follow the segment protocol. Carries the last raw generation.
class SplittingError : public Error {
 public:
  SplittingError(const std::string& what, std::string raw_output)
      : Error(what), raw_output_(std::move(raw_output)) {}
  const std::string& raw_output() const { return raw_output_; }

 private:
  std::string raw_output_;
};

// ---------------------------------------------------------------------------
// Text helpers shared by the feature extractors.
// ---------------------------------------------------------------------------

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Collapses runs of whitespace to one space, trims, and lowercases.
std::string fold_text(std::string_view s);

/// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

/// Whitespace + punctuation tokenization. Punctuation characters become
/// their own tokens; apostrophes inside a word stay attached ("don't").
std::vector<std::string> tokenize(std::string_view s);

bool is_punct_token(std::string_view token);

/// Splits prose into sentences on . ! ? followed by whitespace or end.
std::vector<std::string> split_sentences(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---------------------------------------------------------------------------
// Portable deterministic primitives. std::uniform_*_distribution differs
// between standard libraries, so anything that must be reproducible across
// toolchains goes through these.
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// splitmix64-seeded xoshiro256** generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  /// Uniform integer in [0, bound).
  std::uint64_t uniform_int(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace asa
