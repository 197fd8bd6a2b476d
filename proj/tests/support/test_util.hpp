// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "dysfl/inventory.hpp"
#include "dysfl/rng.hpp"
#include "dysfl/textsim.hpp"
#include "dysfl/types.hpp"

namespace dysfl::testutil {

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("dysfl-test-" + tag + "-" + std::to_string(std::rand()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Utterance make_utterance(const std::vector<std::string>& symbols,
                                const std::vector<i64>& durations,
                                Language lang = Language::English) {
  Utterance utt;
  utt.id = "test";
  utt.language = lang;
  const TokenInventory& inv = TokenInventory::for_language(lang);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    Token tok;
    tok.symbol = symbols[i];
    tok.is_vowel = inv.is_vowel(symbols[i]);
    tok.word_index = 0;
    utt.tokens.push_back(tok);
  }
  utt.durations_ms = durations;
  return utt;
}

inline Utterance random_fluent(u64 seed, Language lang = Language::English) {
  RandomStream rng(seed);
  return textsim::sample_fluent(TokenInventory::for_language(lang),
                                textsim::FluentParams::for_language(lang),
                                "u" + std::to_string(seed), rng);
}

}  // namespace dysfl::testutil
