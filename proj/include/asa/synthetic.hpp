#pragma once

#include <string>
#include <utility>
#include <vector>

#include "asa/corpus.hpp"

namespace asa {

/// (correct sentence, same sentence with one planted error). Both members
/// are equal for sentences that have no error variant.
using SentencePair = std::pair<std::string, std::string>;

/// Every sentence pair the synthetic generator draws from.
std::vector<SentencePair> synthetic_sentence_pairs();

}  // namespace asa
