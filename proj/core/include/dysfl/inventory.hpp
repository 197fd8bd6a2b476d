// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "dysfl/types.hpp"

namespace dysfl {

/// Symbol inventory for one language: all usable symbols plus the vowel
/// subset used to pick prolongation targets. Words are delimited by the
/// word_index field on tokens, not by marker symbols. `vowels` keeps its
/// declaration order so random picks are deterministic.
struct TokenInventory {
  Language language = Language::English;
  std::vector<std::string> symbols;  // excludes PAUSE
  std::vector<std::string> vowels;   // subset of symbols, ordered
  std::unordered_set<std::string> vowel_set;  // lookup mirror of `vowels`

  bool is_vowel(const std::string& symbol) const { return vowel_set.count(symbol) > 0; }
  Token make_token(const std::string& symbol, u32 word_index) const;
  void validate() const;

  /// IPA phoneme set with a default vowel list.
  static const TokenInventory& english();
  /// Toneless pinyin syllables; every syllable contains a prolongable final,
  /// so all syllables are in the vowel subset.
  static const TokenInventory& mandarin();
  static const TokenInventory& for_language(Language lang);
};

}  // namespace dysfl
