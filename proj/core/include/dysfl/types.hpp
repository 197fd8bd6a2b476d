// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dysfl {

using i64 = std::int64_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

/// Bad input data: malformed files, invariant violations, impossible edits.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required (NaN loss, bad tensors).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical time units: events and durations are integer milliseconds,
// frame-level modules run at 50 Hz (20 ms per frame).
inline constexpr i64 kMsPerFrame = 20;

// Stable class codes 0..4; these index class score vectors everywhere.
enum class DysfluencyType : int {
  Repetition = 0,
  Missing = 1,
  Block = 2,
  Replace = 3,
  Prolongation = 4,
};
inline constexpr int kNumDysfluencyTypes = 5;
inline constexpr std::array<DysfluencyType, kNumDysfluencyTypes> kAllDysfluencyTypes = {
    DysfluencyType::Repetition, DysfluencyType::Missing,  DysfluencyType::Block,
    DysfluencyType::Replace,    DysfluencyType::Prolongation,
};

enum class Level { Phoneme, Word, Character };
enum class Language { English, Mandarin };

std::string_view to_string(DysfluencyType t);
std::string_view to_string(Level l);
std::string_view to_string(Language l);
DysfluencyType dysfluency_type_from_string(std::string_view s);
Level level_from_string(std::string_view s);
Language language_from_string(std::string_view s);

/// One annotated dysfluency with time bounds in milliseconds.
struct DysfluencyEvent {
  DysfluencyType type = DysfluencyType::Repetition;
  i64 start_ms = 0;
  i64 end_ms = 0;
  Level level = Level::Phoneme;

  bool operator==(const DysfluencyEvent&) const = default;
  i64 duration_ms() const { return end_ms - start_ms; }
};

// Inserted-silence marker used by Block edits.
inline constexpr std::string_view kPauseSymbol = "PAUSE";

struct Token {
  std::string symbol;      // IPA phoneme, pinyin syllable, or PAUSE
  bool is_vowel = false;   // PAUSE tokens are never vowels
  u32 word_index = 0;      // words are maximal runs of equal word_index

  bool operator==(const Token&) const = default;
  bool is_pause() const { return symbol == kPauseSymbol; }
};

/// A tokenized utterance with per-token durations and its event annotations.
struct Utterance {
  std::string id;
  Language language = Language::English;
  std::vector<Token> tokens;
  std::vector<i64> durations_ms;  // one positive duration per token
  std::vector<DysfluencyEvent> events;  // sorted by start_ms

  bool operator==(const Utterance&) const = default;
  i64 total_duration_ms() const;
};

/// Throws DataError naming the offending field when an invariant is broken.
void validate(const Utterance& utt);

/// Per-region training target over the padded time axis (S regions).
/// Bounds are the owning event's global bounds normalized by the padded
/// length; they are meaningful only when obj == 1.
struct RegionTarget {
  double obj = 0.0;
  double b_start = 0.0;
  double b_end = 0.0;
  std::array<double, kNumDysfluencyTypes> class_onehot{};
};

}  // namespace dysfl
