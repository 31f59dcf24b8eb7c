#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asa::lexicon {

/// One reading of a word form: Universal POS tag, lemma, and UD-style
/// feature string ("Number=Sing|Person=3"), features sorted by name.
struct Reading {
  std::string upos;
  std::string lemma;
  std::string feats;
};

/// All readings of a lowercase word form, most common first. Empty when the
/// form is out of vocabulary.
const std::vector<Reading>& readings(std::string_view lower_form);
bool in_vocabulary(std::string_view lower_form);

struct VerbForms {
  std::string lemma, third_singular, past, past_participle, gerund;
};
/// Inflection table for a verb lemma, if known.
std::optional<VerbForms> verb_forms(std::string_view lemma);
/// Plural of a known noun lemma.
std::optional<std::string> noun_plural(std::string_view singular);
/// Singular of a known plural noun.
std::optional<std::string> noun_singular(std::string_view plural);

bool is_stopword(std::string_view lower_form);

/// Visual concepts shared by the procedural image generator and the
/// concept-based image/text embedding double.
struct Concept {
  std::string name;
  std::array<unsigned char, 3> rgb;
  std::vector<std::string> keywords;
};
const std::vector<Concept>& concepts();
/// Index into concepts() of the concept a word names, if any.
std::optional<std::size_t> concept_of(std::string_view lower_form);

/// Vowel-cluster syllable estimate on orthography (minimum 1 for words).
int syllable_count(std::string_view word);

}  // namespace asa::lexicon
