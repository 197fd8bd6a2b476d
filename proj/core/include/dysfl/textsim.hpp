// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "dysfl/inventory.hpp"
#include "dysfl/rng.hpp"
#include "dysfl/types.hpp"

namespace dysfl::textsim {

// Rule parameter ranges. Repetition makes the target occur 2-4 times total,
// block pauses are 200-300 ms (10-15 frames at 20 ms), prolongation
// multiplies a vowel's duration by 4-6.
inline constexpr int kRepeatMin = 2, kRepeatMax = 4;
inline constexpr i64 kPauseMsMin = 200, kPauseMsMax = 300;
inline constexpr int kProlongMin = 4, kProlongMax = 6;
inline constexpr int kPlacementRetries = 16;

/// One requested edit. Unset position means "choose a valid target at
/// random"; zero-valued parameters are sampled from the ranges above.
struct InjectionSpec {
  DysfluencyType type = DysfluencyType::Repetition;
  Level level = Level::Phoneme;
  std::optional<std::size_t> position;  // token index
  int repeat_total = 0;                 // repetition: total occurrences
  i64 pause_ms = 0;                     // block: inserted pause length
  int prolong_factor = 0;               // prolongation: duration multiplier
};

/// Multiple dysfluencies in one utterance: either 2-3 instances of a single
/// type, or one of the five allowed type pairs at two positions.
struct CoDysfluencyPlan {
  enum class Mode { SingleType, MultiType };
  Mode mode = Mode::SingleType;
  DysfluencyType single_type = DysfluencyType::Repetition;
  int count = 2;  // SingleType: 2 or 3
  std::pair<DysfluencyType, DysfluencyType> pair = {DysfluencyType::Repetition,
                                                    DysfluencyType::Missing};
};

/// The five multi-type combinations.
const std::array<std::pair<DysfluencyType, DysfluencyType>, 5>& allowed_pairs();
bool is_allowed_pair(std::pair<DysfluencyType, DysfluencyType> p);

/// Applies one edit and appends exactly one event whose bounds equal the
/// edited region. Pre-existing events after the edit point are shifted by
/// the net duration change. Pure: the input is never modified.
Utterance inject(const Utterance& utt, const InjectionSpec& spec, RandomStream& rng);

/// Applies a co-dysfluency plan; resulting events are non-overlapping and
/// sorted. Placement retries a bounded number of times before failing.
Utterance inject_co_dysfluency(const Utterance& utt, const CoDysfluencyPlan& plan,
                               RandomStream& rng);

/// Mix over single events and co-dysfluency plans used by corpus generation.
struct MixConfig {
  std::array<double, kNumDysfluencyTypes> type_weights = {1, 1, 1, 1, 1};
  double co_single_prob = 0.0;  // P(SingleType plan)
  double co_multi_prob = 0.0;   // P(MultiType plan)

  void validate() const;
  static MixConfig uniform() { return MixConfig{}; }
};

/// Produces `count` annotated utterances by cycling over `base`. Output i is
/// a function of (base[i % |base|], mix, seed, i) only, so any processing
/// order yields the same corpus.
std::vector<Utterance> generate_corpus(const std::vector<Utterance>& base,
                                       const MixConfig& mix, std::size_t count, u64 seed);

/// Parameters for sampling fluent base utterances. Word-structured for
/// English (each word gets at least one vowel); one syllable per word for
/// Mandarin. Duration ranges keep worst-case edited utterances inside the
/// default render budget.
struct FluentParams {
  int min_words = 2, max_words = 3;
  int min_word_tokens = 2, max_word_tokens = 4;
  i64 min_duration_ms = 60, max_duration_ms = 150;

  static FluentParams for_language(Language lang);
};

Utterance sample_fluent(const TokenInventory& inv, const FluentParams& params,
                        const std::string& id, RandomStream& rng);

}  // namespace dysfl::textsim
