// SPDX-License-Identifier: Apache-2.0
#include "dysfl/types.hpp"

#include <numeric>
#include <sstream>

namespace dysfl {

std::string_view to_string(DysfluencyType t) {
  switch (t) {
    case DysfluencyType::Repetition: return "repetition";
    case DysfluencyType::Missing: return "missing";
    case DysfluencyType::Block: return "block";
    case DysfluencyType::Replace: return "replace";
    case DysfluencyType::Prolongation: return "prolongation";
  }
  throw DataError("unknown dysfluency type code");
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Phoneme: return "phoneme";
    case Level::Word: return "word";
    case Level::Character: return "character";
  }
  throw DataError("unknown level code");
}

std::string_view to_string(Language l) {
  switch (l) {
    case Language::English: return "english";
    case Language::Mandarin: return "mandarin";
  }
  throw DataError("unknown language code");
}

DysfluencyType dysfluency_type_from_string(std::string_view s) {
  for (DysfluencyType t : kAllDysfluencyTypes) {
    if (s == to_string(t)) return t;
  }
  throw DataError("unknown dysfluency type: '" + std::string(s) + "'");
}

Level level_from_string(std::string_view s) {
  for (Level l : {Level::Phoneme, Level::Word, Level::Character}) {
    if (s == to_string(l)) return l;
  }
  throw DataError("unknown level: '" + std::string(s) + "'");
}

Language language_from_string(std::string_view s) {
  for (Language l : {Language::English, Language::Mandarin}) {
    if (s == to_string(l)) return l;
  }
  throw DataError("unknown language: '" + std::string(s) + "'");
}

i64 Utterance::total_duration_ms() const {
  return std::accumulate(durations_ms.begin(), durations_ms.end(), i64{0});
}

void validate(const Utterance& utt) {
  auto fail = [&](const std::string& what) {
    throw DataError("utterance '" + utt.id + "': " + what);
  };
  if (utt.tokens.size() != utt.durations_ms.size()) {
    fail("tokens/durations_ms length mismatch (" + std::to_string(utt.tokens.size()) +
         " vs " + std::to_string(utt.durations_ms.size()) + ")");
  }
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    const Token& tok = utt.tokens[i];
    if (tok.symbol.empty()) fail("tokens[" + std::to_string(i) + "].symbol is empty");
    if (tok.is_pause() && tok.is_vowel) {
      fail("tokens[" + std::to_string(i) + "]: PAUSE marked as vowel");
    }
    if (utt.durations_ms[i] <= 0) {
      fail("durations_ms[" + std::to_string(i) + "] must be positive, got " +
           std::to_string(utt.durations_ms[i]));
    }
  }
  const i64 total = utt.total_duration_ms();
  i64 prev_start = -1;
  for (std::size_t i = 0; i < utt.events.size(); ++i) {
    const DysfluencyEvent& ev = utt.events[i];
    const std::string tag = "events[" + std::to_string(i) + "]";
    if (ev.start_ms < 0) fail(tag + ".start_ms is negative");
    if (ev.start_ms >= ev.end_ms) {
      fail(tag + ": start_ms " + std::to_string(ev.start_ms) + " >= end_ms " +
           std::to_string(ev.end_ms));
    }
    if (ev.end_ms > total) {
      fail(tag + ".end_ms " + std::to_string(ev.end_ms) + " exceeds utterance span " +
           std::to_string(total));
    }
    if (ev.start_ms < prev_start) fail(tag + ": events not sorted by start_ms");
    prev_start = ev.start_ms;
    const bool mandarin = utt.language == Language::Mandarin;
    if (ev.level == Level::Character && !mandarin) {
      fail(tag + ": character level on a non-Mandarin utterance");
    }
    if (mandarin && ev.level != Level::Character) {
      fail(tag + ": Mandarin utterances carry character-level events only");
    }
  }
}

}  // namespace dysfl
