// SPDX-License-Identifier: Apache-2.0
#include "dysfl/textsim.hpp"

#include <algorithm>
#include <string>

namespace dysfl::textsim {

namespace {

bool intervals_overlap(i64 a0, i64 a1, i64 b0, i64 b1) { return a0 < b1 && b0 < a1; }

std::vector<i64> token_starts(const Utterance& utt) {
  std::vector<i64> starts(utt.tokens.size() + 1, 0);
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    starts[i + 1] = starts[i] + utt.durations_ms[i];
  }
  return starts;
}

struct WordRange {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
};

std::vector<WordRange> word_ranges(const Utterance& utt) {
  std::vector<WordRange> words;
  std::size_t i = 0;
  while (i < utt.tokens.size()) {
    std::size_t j = i + 1;
    while (j < utt.tokens.size() && utt.tokens[j].word_index == utt.tokens[i].word_index) ++j;
    words.push_back({i, j});
    i = j;
  }
  return words;
}

bool span_hits_event(const Utterance& utt, const std::vector<i64>& starts, std::size_t first,
                     std::size_t last) {
  const i64 s = starts[first];
  const i64 e = starts[last];
  for (const DysfluencyEvent& ev : utt.events) {
    if (intervals_overlap(s, e, ev.start_ms, ev.end_ms)) return true;
  }
  return false;
}

bool run_is_clean(const Utterance& utt, const WordRange& w) {
  for (std::size_t i = w.first; i < w.last; ++i) {
    if (utt.tokens[i].is_pause()) return false;
  }
  return true;
}

// Shifts events starting at or after `from_ms` by `delta_ms`; events before
// the edit point are untouched (edits never overlap existing events).
void shift_events(std::vector<DysfluencyEvent>& events, i64 from_ms, i64 delta_ms) {
  for (DysfluencyEvent& ev : events) {
    if (ev.start_ms >= from_ms) {
      ev.start_ms += delta_ms;
      ev.end_ms += delta_ms;
    }
  }
}

void insert_sorted(std::vector<DysfluencyEvent>& events, DysfluencyEvent ev) {
  events.push_back(ev);
  std::stable_sort(events.begin(), events.end(),
                   [](const DysfluencyEvent& a, const DysfluencyEvent& b) {
                     return a.start_ms != b.start_ms ? a.start_ms < b.start_ms
                                                     : a.end_ms < b.end_ms;
                   });
}

Level event_level_for(const Utterance& utt, Level requested) {
  return utt.language == Language::Mandarin ? Level::Character : requested;
}

int sample_or_check(RandomStream& rng, int given, int lo, int hi, const char* what) {
  if (given == 0) return static_cast<int>(rng.uniform_int(lo, hi));
  if (given < lo || given > hi) {
    throw DataError(std::string("inject: ") + what + " " + std::to_string(given) +
                    " outside [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
  return given;
}

i64 sample_or_check_ms(RandomStream& rng, i64 given, i64 lo, i64 hi, const char* what) {
  if (given == 0) return rng.uniform_int(lo, hi);
  if (given < lo || given > hi) {
    throw DataError(std::string("inject: ") + what + " " + std::to_string(given) +
                    " outside [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
  return given;
}

// Candidate token indices for a phoneme/character-level edit of `type`.
std::vector<std::size_t> token_candidates(const Utterance& utt, const std::vector<i64>& starts,
                                          DysfluencyType type, bool explicit_position) {
  std::vector<std::size_t> out;
  const std::vector<WordRange> words = word_ranges(utt);
  const bool word_start_only =
      type == DysfluencyType::Repetition && !explicit_position;
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    const Token& tok = utt.tokens[i];
    if (tok.is_pause()) continue;
    if (type == DysfluencyType::Prolongation && !tok.is_vowel) continue;
    if (word_start_only) {
      // Repetition targets the first non-pause token of a word.
      bool starts_word = false;
      for (const WordRange& w : words) {
        std::size_t lead = w.first;
        while (lead < w.last && utt.tokens[lead].is_pause()) ++lead;
        if (lead == i) {
          starts_word = true;
          break;
        }
      }
      if (!starts_word) continue;
    }
    if (span_hits_event(utt, starts, i, i + 1)) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace

const std::array<std::pair<DysfluencyType, DysfluencyType>, 5>& allowed_pairs() {
  static const std::array<std::pair<DysfluencyType, DysfluencyType>, 5> pairs = {{
      {DysfluencyType::Repetition, DysfluencyType::Missing},
      {DysfluencyType::Repetition, DysfluencyType::Block},
      {DysfluencyType::Missing, DysfluencyType::Block},
      {DysfluencyType::Replace, DysfluencyType::Block},
      {DysfluencyType::Prolongation, DysfluencyType::Block},
  }};
  return pairs;
}

bool is_allowed_pair(std::pair<DysfluencyType, DysfluencyType> p) {
  for (const auto& q : allowed_pairs()) {
    if (q == p) return true;
  }
  return false;
}

Utterance inject(const Utterance& utt, const InjectionSpec& spec, RandomStream& rng) {
  if (utt.tokens.empty()) throw DataError("inject: empty utterance");
  if (utt.language == Language::Mandarin) {
    if (spec.level != Level::Character) {
      throw DataError("inject: Mandarin utterances take character-level edits only");
    }
  } else if (spec.level == Level::Character) {
    throw DataError("inject: character level is Mandarin-only");
  }
  if (spec.level == Level::Word && spec.type != DysfluencyType::Repetition &&
      spec.type != DysfluencyType::Missing) {
    throw DataError("inject: word level applies to repetition and missing only");
  }

  const std::vector<i64> starts = token_starts(utt);
  Utterance out = utt;
  const Level ev_level = event_level_for(utt, spec.level);

  // Resolve the edited token range [first, last).
  std::size_t first = 0, last = 0;
  if (spec.level == Level::Word) {
    std::vector<WordRange> words;
    for (const WordRange& w : word_ranges(utt)) {
      if (run_is_clean(utt, w) && !span_hits_event(utt, starts, w.first, w.last)) {
        words.push_back(w);
      }
    }
    if (spec.position) {
      const std::size_t pos = *spec.position;
      if (pos >= utt.tokens.size()) throw DataError("inject: position out of range");
      auto it = std::find_if(words.begin(), words.end(), [&](const WordRange& w) {
        return pos >= w.first && pos < w.last;
      });
      if (it == words.end()) throw DataError("inject: no editable word at position");
      first = it->first;
      last = it->last;
    } else {
      if (words.empty()) throw DataError("inject: no valid word position");
      const WordRange& w = words[rng.index(words.size())];
      first = w.first;
      last = w.last;
    }
  } else {
    if (spec.position) {
      const std::size_t pos = *spec.position;
      if (pos >= utt.tokens.size()) throw DataError("inject: position out of range");
      const Token& tok = utt.tokens[pos];
      if (tok.is_pause()) throw DataError("inject: position points at a PAUSE token");
      if (spec.type == DysfluencyType::Prolongation && !tok.is_vowel) {
        throw DataError("inject: prolongation target must be a vowel");
      }
      if (span_hits_event(utt, starts, pos, pos + 1)) {
        throw DataError("inject: position overlaps an existing event");
      }
      first = pos;
      last = pos + 1;
    } else {
      const std::vector<std::size_t> cands = token_candidates(utt, starts, spec.type, false);
      if (cands.empty()) throw DataError("inject: no valid injection position");
      first = cands[rng.index(cands.size())];
      last = first + 1;
    }
  }

  const i64 span_start = starts[first];
  const i64 span_end = starts[last];
  const i64 span_dur = span_end - span_start;

  DysfluencyEvent ev;
  ev.level = ev_level;
  ev.type = spec.type;

  switch (spec.type) {
    case DysfluencyType::Repetition: {
      const int k = sample_or_check(rng, spec.repeat_total, kRepeatMin, kRepeatMax,
                                    "repeat_total");
      const auto copy_tokens =
          std::vector<Token>(utt.tokens.begin() + first, utt.tokens.begin() + last);
      const auto copy_durs =
          std::vector<i64>(utt.durations_ms.begin() + first, utt.durations_ms.begin() + last);
      for (int c = 1; c < k; ++c) {
        out.tokens.insert(out.tokens.begin() + last + (c - 1) * copy_tokens.size(),
                          copy_tokens.begin(), copy_tokens.end());
        out.durations_ms.insert(out.durations_ms.begin() + last + (c - 1) * copy_durs.size(),
                                copy_durs.begin(), copy_durs.end());
      }
      shift_events(out.events, span_end, static_cast<i64>(k - 1) * span_dur);
      ev.start_ms = span_start;
      ev.end_ms = span_start + static_cast<i64>(k) * span_dur;
      break;
    }
    case DysfluencyType::Missing: {
      if (last - first >= utt.tokens.size()) {
        throw DataError("inject: removal would empty the utterance");
      }
      out.tokens.erase(out.tokens.begin() + first, out.tokens.begin() + last);
      out.durations_ms.erase(out.durations_ms.begin() + first,
                             out.durations_ms.begin() + last);
      shift_events(out.events, span_end, -span_dur);
      // The event marks the former span of the removed material, measured
      // from the cut point; near the end it slides left to stay inside the
      // edited utterance.
      const i64 new_total = out.total_duration_ms();
      i64 ev_start = span_start;
      i64 ev_end = span_start + span_dur;
      if (ev_end > new_total) {
        ev_start = std::max<i64>(0, new_total - span_dur);
        ev_end = new_total;
      }
      ev.start_ms = ev_start;
      ev.end_ms = ev_end;
      break;
    }
    case DysfluencyType::Block: {
      const i64 pause = sample_or_check_ms(rng, spec.pause_ms, kPauseMsMin, kPauseMsMax,
                                           "pause_ms");
      Token pause_tok;
      pause_tok.symbol = std::string(kPauseSymbol);
      pause_tok.is_vowel = false;
      pause_tok.word_index = utt.tokens[last - 1].word_index;
      out.tokens.insert(out.tokens.begin() + last, pause_tok);
      out.durations_ms.insert(out.durations_ms.begin() + last, pause);
      shift_events(out.events, span_end, pause);
      ev.start_ms = span_end;
      ev.end_ms = span_end + pause;
      break;
    }
    case DysfluencyType::Replace: {
      const TokenInventory& inv = TokenInventory::for_language(utt.language);
      std::vector<std::string> choices;
      for (const std::string& s : inv.symbols) {
        if (s != utt.tokens[first].symbol) choices.push_back(s);
      }
      if (choices.empty()) throw DataError("inject: no replacement symbol available");
      const std::string& sub = choices[rng.index(choices.size())];
      out.tokens[first] = inv.make_token(sub, utt.tokens[first].word_index);
      ev.start_ms = span_start;
      ev.end_ms = span_end;
      break;
    }
    case DysfluencyType::Prolongation: {
      const int f = sample_or_check(rng, spec.prolong_factor, kProlongMin, kProlongMax,
                                    "prolong_factor");
      out.durations_ms[first] = span_dur * f;
      shift_events(out.events, span_end, span_dur * (f - 1));
      ev.start_ms = span_start;
      ev.end_ms = span_start + span_dur * f;
      break;
    }
  }

  insert_sorted(out.events, ev);
  return out;
}

namespace {

bool events_disjoint(const std::vector<DysfluencyEvent>& events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].start_ms < events[i - 1].end_ms) return false;
  }
  return true;
}

}  // namespace

Utterance inject_co_dysfluency(const Utterance& utt, const CoDysfluencyPlan& plan,
                               RandomStream& rng) {
  std::vector<DysfluencyType> sequence;
  if (plan.mode == CoDysfluencyPlan::Mode::SingleType) {
    if (plan.count < 2 || plan.count > 3) {
      throw DataError("co-dysfluency: single-type instance count must be 2 or 3");
    }
    sequence.assign(static_cast<std::size_t>(plan.count), plan.single_type);
  } else {
    if (!is_allowed_pair(plan.pair)) {
      throw DataError("co-dysfluency: pair (" + std::string(to_string(plan.pair.first)) +
                      ", " + std::string(to_string(plan.pair.second)) + ") is not allowed");
    }
    sequence = {plan.pair.first, plan.pair.second};
  }

  const Level level = utt.language == Language::Mandarin ? Level::Character : Level::Phoneme;
  Utterance current = utt;
  for (std::size_t n = 0; n < sequence.size(); ++n) {
    InjectionSpec spec;
    spec.type = sequence[n];
    spec.level = level;
    bool placed = false;
    std::string last_error;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      try {
        Utterance next = inject(current, spec, rng);
        if (events_disjoint(next.events)) {
          current = std::move(next);
          placed = true;
        } else {
          last_error = "sampled position produced overlapping events";
        }
      } catch (const DataError& e) {
        last_error = e.what();
      }
    }
    if (!placed) {
      throw DataError("co-dysfluency: cannot place instance " + std::to_string(n + 1) +
                      " of " + std::string(to_string(sequence[n])) + " (" + last_error + ")");
    }
  }
  return current;
}

void MixConfig::validate() const {
  double total = 0;
  for (double w : type_weights) {
    if (w < 0) throw DataError("mix: negative type weight");
    total += w;
  }
  if (total <= 0) throw DataError("mix: all type weights are zero");
  if (co_single_prob < 0 || co_multi_prob < 0 || co_single_prob + co_multi_prob > 1.0) {
    throw DataError("mix: co-dysfluency probabilities must be in [0,1] and sum to at most 1");
  }
}

namespace {

DysfluencyType sample_type(const MixConfig& mix, RandomStream& rng) {
  double total = 0;
  for (double w : mix.type_weights) total += w;
  const double r = rng.uniform() * total;
  double acc = 0;
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    acc += mix.type_weights[static_cast<std::size_t>(t)];
    if (r < acc) return static_cast<DysfluencyType>(t);
  }
  return DysfluencyType::Prolongation;
}

}  // namespace

std::vector<Utterance> generate_corpus(const std::vector<Utterance>& base, const MixConfig& mix,
                                       std::size_t count, u64 seed) {
  if (base.empty()) throw DataError("generate_corpus: empty base corpus");
  mix.validate();
  const RandomStream master(seed);
  std::vector<Utterance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng = master.child(i);
    const Utterance& src = base[i % base.size()];
    const Level level =
        src.language == Language::Mandarin ? Level::Character : Level::Phoneme;
    const double r = rng.uniform();
    Utterance result;
    if (r < mix.co_single_prob) {
      CoDysfluencyPlan plan;
      plan.mode = CoDysfluencyPlan::Mode::SingleType;
      plan.single_type = sample_type(mix, rng);
      plan.count = static_cast<int>(rng.uniform_int(2, 3));
      result = inject_co_dysfluency(src, plan, rng);
    } else if (r < mix.co_single_prob + mix.co_multi_prob) {
      CoDysfluencyPlan plan;
      plan.mode = CoDysfluencyPlan::Mode::MultiType;
      plan.pair = allowed_pairs()[rng.index(allowed_pairs().size())];
      result = inject_co_dysfluency(src, plan, rng);
    } else {
      InjectionSpec spec;
      spec.type = sample_type(mix, rng);
      spec.level = level;
      result = inject(src, spec, rng);
    }
    result.id = src.id + "-" + std::to_string(i);
    validate(result);
    out.push_back(std::move(result));
  }
  return out;
}

FluentParams FluentParams::for_language(Language lang) {
  FluentParams p;
  if (lang == Language::Mandarin) {
    // One syllable per word; syllables run longer than English phonemes.
    p.min_words = 5;
    p.max_words = 9;
    p.min_word_tokens = 1;
    p.max_word_tokens = 1;
    p.min_duration_ms = 100;
    p.max_duration_ms = 200;
  }
  return p;
}

Utterance sample_fluent(const TokenInventory& inv, const FluentParams& params,
                        const std::string& id, RandomStream& rng) {
  inv.validate();
  Utterance utt;
  utt.id = id;
  utt.language = inv.language;
  const int n_words = static_cast<int>(rng.uniform_int(params.min_words, params.max_words));
  for (int w = 0; w < n_words; ++w) {
    const int len =
        static_cast<int>(rng.uniform_int(params.min_word_tokens, params.max_word_tokens));
    const std::size_t vowel_slot = rng.index(static_cast<std::size_t>(len));
    for (int j = 0; j < len; ++j) {
      const std::string& symbol = static_cast<std::size_t>(j) == vowel_slot
                                      ? rng.pick(inv.vowels)
                                      : rng.pick(inv.symbols);
      utt.tokens.push_back(inv.make_token(symbol, static_cast<u32>(w)));
      utt.durations_ms.push_back(rng.uniform_int(params.min_duration_ms, params.max_duration_ms));
    }
  }
  return utt;
}

}  // namespace dysfl::textsim
