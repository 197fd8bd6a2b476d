// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>

#include "doctest.h"
#include "dysfl/textsim.hpp"
#include "support/test_util.hpp"

using namespace dysfl;
using namespace dysfl::textsim;

namespace {

// Brute-force re-timing: recompute every token's absolute start from the
// duration list and check that each event's bounds sit on token boundaries
// in the edited utterance (missing events excepted: they mark a cut).
std::vector<i64> starts_of(const Utterance& utt) {
  std::vector<i64> s(utt.tokens.size() + 1, 0);
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) s[i + 1] = s[i] + utt.durations_ms[i];
  return s;
}

bool on_boundaries(const Utterance& utt, const DysfluencyEvent& ev) {
  const auto s = starts_of(utt);
  const bool start_ok = std::find(s.begin(), s.end(), ev.start_ms) != s.end();
  const bool end_ok = std::find(s.begin(), s.end(), ev.end_ms) != s.end();
  return start_ok && end_ok;
}

}  // namespace

TEST_CASE("repetition at word start, k=3") {
  Utterance utt = testutil::make_utterance({"p", "l", "i:", "z"}, {80, 70, 120, 90});
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Repetition;
  spec.position = 0;
  spec.repeat_total = 3;
  const Utterance out = inject(utt, spec, rng);
  REQUIRE(out.tokens.size() == 6);
  CHECK(out.tokens[0].symbol == "p");
  CHECK(out.tokens[1].symbol == "p");
  CHECK(out.tokens[2].symbol == "p");
  CHECK(out.tokens[3].symbol == "l");
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].type == DysfluencyType::Repetition);
  CHECK(out.events[0].start_ms == 0);
  CHECK(out.events[0].end_ms == 240);  // three copies of the 80 ms token
  CHECK(out.total_duration_ms() == utt.total_duration_ms() + 160);
  CHECK(utt.tokens.size() == 4);  // input untouched
}

TEST_CASE("missing removes the token and keeps neighbors' durations") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 300});
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Missing;
  spec.position = 1;
  const Utterance out = inject(utt, spec, rng);
  REQUIRE(out.tokens.size() == 2);
  CHECK(out.tokens[0].symbol == "k");
  CHECK(out.tokens[1].symbol == "t");
  CHECK(out.durations_ms == std::vector<i64>{100, 300});
  REQUIRE(out.events.size() == 1);
  // Former span of "ae", measured from the cut.
  CHECK(out.events[0].start_ms == 100);
  CHECK(out.events[0].end_ms == 300);
  CHECK(out.events[0].type == DysfluencyType::Missing);
}

TEST_CASE("missing near the end slides its marker inside the utterance") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 400, 100});
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Missing;
  spec.position = 1;
  const Utterance out = inject(utt, spec, rng);
  CHECK(out.total_duration_ms() == 200);
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].start_ms == 0);
  CHECK(out.events[0].end_ms == 200);
  CHECK_NOTHROW(validate(out));
}

TEST_CASE("block inserts a pause and shifts later events") {
  Utterance utt = testutil::make_utterance({"ma", "a", "ao"}, {150, 150, 150},
                                           Language::Mandarin);
  utt.events.push_back({DysfluencyType::Prolongation, 300, 450, Level::Character});
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Block;
  spec.level = Level::Character;
  spec.position = 0;
  spec.pause_ms = 240;
  const Utterance out = inject(utt, spec, rng);
  REQUIRE(out.tokens.size() == 4);
  CHECK(out.tokens[1].symbol == kPauseSymbol);
  CHECK(out.durations_ms[1] == 240);
  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].type == DysfluencyType::Block);
  CHECK(out.events[0].start_ms == 150);
  CHECK(out.events[0].end_ms == 390);
  // The pre-existing event moved right by the inserted pause.
  CHECK(out.events[1].start_ms == 540);
  CHECK(out.events[1].end_ms == 690);
}

TEST_CASE("replace swaps the symbol, keeps the duration") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 150});
  RandomStream rng(5);
  InjectionSpec spec;
  spec.type = DysfluencyType::Replace;
  spec.position = 1;
  const Utterance out = inject(utt, spec, rng);
  CHECK(out.tokens[1].symbol != "ae");
  CHECK(out.tokens[1].symbol != kPauseSymbol);
  CHECK(out.durations_ms == utt.durations_ms);
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].start_ms == 100);
  CHECK(out.events[0].end_ms == 300);
}

TEST_CASE("prolongation multiplies the vowel duration by 4-6") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 150});
  RandomStream rng(5);
  InjectionSpec spec;
  spec.type = DysfluencyType::Prolongation;
  spec.position = 1;
  const Utterance out = inject(utt, spec, rng);
  const i64 factor = out.durations_ms[1] / 200;
  CHECK(factor >= 4);
  CHECK(factor <= 6);
  CHECK(out.durations_ms[1] % 200 == 0);
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].start_ms == 100);
  CHECK(out.events[0].end_ms == 100 + out.durations_ms[1]);
}

TEST_CASE("prolongation requires a vowel target") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 150});
  RandomStream rng(5);
  InjectionSpec spec;
  spec.type = DysfluencyType::Prolongation;
  spec.position = 0;
  CHECK_THROWS_WITH_AS(inject(utt, spec, rng), doctest::Contains("vowel"), DataError);
}

TEST_CASE("word-level repetition copies the whole word") {
  Utterance utt = testutil::make_utterance({"p", "l", "i:", "z"}, {80, 70, 120, 90});
  utt.tokens[2].word_index = 1;
  utt.tokens[3].word_index = 1;
  RandomStream rng(3);
  InjectionSpec spec;
  spec.type = DysfluencyType::Repetition;
  spec.level = Level::Word;
  spec.position = 2;
  spec.repeat_total = 2;
  const Utterance out = inject(utt, spec, rng);
  REQUIRE(out.tokens.size() == 6);
  CHECK(out.tokens[4].symbol == "i:");
  CHECK(out.tokens[5].symbol == "z");
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].level == Level::Word);
  CHECK(out.events[0].start_ms == 150);
  CHECK(out.events[0].end_ms == 150 + 2 * 210);
}

TEST_CASE("language/level guards") {
  Utterance en = testutil::make_utterance({"k", "ae"}, {100, 100});
  Utterance zh = testutil::make_utterance({"ma", "hao"}, {150, 150}, Language::Mandarin);
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Repetition;
  spec.level = Level::Word;
  CHECK_THROWS_AS(inject(zh, spec, rng), DataError);  // word level on Mandarin
  spec.level = Level::Character;
  CHECK_THROWS_AS(inject(en, spec, rng), DataError);  // character level on English
  spec.level = Level::Phoneme;
  CHECK_THROWS_AS(inject(zh, spec, rng), DataError);  // Mandarin takes character level
  spec.level = Level::Word;
  spec.type = DysfluencyType::Block;
  CHECK_THROWS_AS(inject(en, spec, rng), DataError);  // block has no word level
  CHECK_THROWS_AS(inject(Utterance{}, InjectionSpec{}, rng), DataError);  // empty utterance
}

TEST_CASE("removal emptying the utterance is an error") {
  Utterance utt = testutil::make_utterance({"ae"}, {100});
  RandomStream rng(1);
  InjectionSpec spec;
  spec.type = DysfluencyType::Missing;
  spec.position = 0;
  CHECK_THROWS_WITH_AS(inject(utt, spec, rng), doctest::Contains("empty"), DataError);
}

TEST_CASE("injection invariants hold over random edits") {
  // Duration accounting, boundary alignment, shift correctness, purity.
  int checked = 0;
  for (u64 seed = 0; seed < 300; ++seed) {
    const Language lang = seed % 3 == 0 ? Language::Mandarin : Language::English;
    Utterance base = testutil::random_fluent(seed, lang);
    const Utterance snapshot = base;
    RandomStream rng(seed * 17 + 1);
    InjectionSpec spec;
    spec.type = kAllDysfluencyTypes[seed % kNumDysfluencyTypes];
    spec.level = lang == Language::Mandarin ? Level::Character : Level::Phoneme;
    Utterance out;
    try {
      out = inject(base, spec, rng);
    } catch (const DataError&) {
      continue;  // no valid position for this draw
    }
    CHECK(base == snapshot);
    CHECK_NOTHROW(validate(out));
    REQUIRE(out.events.size() == 1);
    const DysfluencyEvent& ev = out.events[0];
    const i64 delta = out.total_duration_ms() - base.total_duration_ms();
    switch (spec.type) {
      case DysfluencyType::Repetition:
        CHECK(delta > 0);
        CHECK(ev.duration_ms() % (delta / (ev.duration_ms() / delta)) == 0);
        CHECK(on_boundaries(out, ev));
        break;
      case DysfluencyType::Missing:
        CHECK(delta < 0);
        break;
      case DysfluencyType::Block:
        CHECK(delta >= kPauseMsMin);
        CHECK(delta <= kPauseMsMax);
        CHECK(ev.duration_ms() == delta);
        CHECK(on_boundaries(out, ev));
        break;
      case DysfluencyType::Replace:
        CHECK(delta == 0);
        CHECK(on_boundaries(out, ev));
        break;
      case DysfluencyType::Prolongation:
        CHECK(delta > 0);
        CHECK(on_boundaries(out, ev));
        break;
    }
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("co-dysfluency: single type places exactly 2 events") {
  Utterance base = testutil::random_fluent(11);
  RandomStream rng(2);
  CoDysfluencyPlan plan;
  plan.mode = CoDysfluencyPlan::Mode::SingleType;
  plan.single_type = DysfluencyType::Repetition;
  plan.count = 2;
  const Utterance out = inject_co_dysfluency(base, plan, rng);
  REQUIRE(out.events.size() == 2);
  for (const auto& ev : out.events) CHECK(ev.type == DysfluencyType::Repetition);
  CHECK(out.events[0].end_ms <= out.events[1].start_ms);
}

TEST_CASE("co-dysfluency: multi type places one event per pair member") {
  Utterance base = testutil::random_fluent(12);
  RandomStream rng(3);
  CoDysfluencyPlan plan;
  plan.mode = CoDysfluencyPlan::Mode::MultiType;
  plan.pair = {DysfluencyType::Replace, DysfluencyType::Block};
  const Utterance out = inject_co_dysfluency(base, plan, rng);
  REQUIRE(out.events.size() == 2);
  std::multiset<DysfluencyType> types{out.events[0].type, out.events[1].type};
  CHECK(types == std::multiset<DysfluencyType>{DysfluencyType::Replace, DysfluencyType::Block});
}

TEST_CASE("co-dysfluency: disallowed pair rejected") {
  Utterance base = testutil::random_fluent(13);
  RandomStream rng(4);
  CoDysfluencyPlan plan;
  plan.mode = CoDysfluencyPlan::Mode::MultiType;
  plan.pair = {DysfluencyType::Repetition, DysfluencyType::Prolongation};
  CHECK_THROWS_WITH_AS(inject_co_dysfluency(base, plan, rng), doctest::Contains("not allowed"),
                       DataError);
}

TEST_CASE("co-dysfluency: impossible placement errors out") {
  Utterance tiny = testutil::make_utterance({"k", "ae"}, {100, 100});
  RandomStream rng(5);
  CoDysfluencyPlan plan;
  plan.mode = CoDysfluencyPlan::Mode::SingleType;
  plan.single_type = DysfluencyType::Repetition;
  plan.count = 3;
  CHECK_THROWS_WITH_AS(inject_co_dysfluency(tiny, plan, rng), doctest::Contains("cannot place"),
                       DataError);
}

TEST_CASE("generate_corpus: uniform mix lands in the multinomial window") {
  std::vector<Utterance> base;
  for (u64 i = 0; i < 50; ++i) base.push_back(testutil::random_fluent(i));
  const auto corpus = generate_corpus(base, MixConfig::uniform(), 1000, 77);
  REQUIRE(corpus.size() == 1000);
  std::map<DysfluencyType, int> counts;
  for (const Utterance& u : corpus) {
    REQUIRE(u.events.size() == 1);
    ++counts[u.events[0].type];
  }
  for (DysfluencyType t : kAllDysfluencyTypes) {
    INFO("type ", to_string(t), " count ", counts[t]);
    CHECK(counts[t] >= 150);  // ~4 sigma around 200 for n=1000, p=0.2
    CHECK(counts[t] <= 250);
  }
}

TEST_CASE("generate_corpus: pure block mix produces only block events") {
  std::vector<Utterance> base;
  for (u64 i = 0; i < 10; ++i) base.push_back(testutil::random_fluent(i));
  MixConfig mix;
  mix.type_weights = {0, 0, 1, 0, 0};
  const auto corpus = generate_corpus(base, mix, 100, 5);
  for (const Utterance& u : corpus) {
    for (const auto& ev : u.events) CHECK(ev.type == DysfluencyType::Block);
  }
}

TEST_CASE("generate_corpus: deterministic under seed") {
  std::vector<Utterance> base;
  for (u64 i = 0; i < 10; ++i) base.push_back(testutil::random_fluent(i));
  const auto a = generate_corpus(base, MixConfig::uniform(), 64, 123);
  const auto b = generate_corpus(base, MixConfig::uniform(), 64, 123);
  CHECK(a == b);
}

TEST_CASE("generate_corpus rejects empty base") {
  CHECK_THROWS_AS(generate_corpus({}, MixConfig::uniform(), 10, 1), DataError);
}

TEST_CASE("co-dysfluency corpora keep events disjoint") {
  std::vector<Utterance> base;
  for (u64 i = 0; i < 20; ++i) base.push_back(testutil::random_fluent(i));
  MixConfig mix;
  mix.co_single_prob = 0.5;
  mix.co_multi_prob = 0.5;
  const auto corpus = generate_corpus(base, mix, 200, 9);
  for (const Utterance& u : corpus) {
    CHECK(u.events.size() >= 2);
    for (std::size_t i = 1; i < u.events.size(); ++i) {
      CHECK(u.events[i].start_ms >= u.events[i - 1].end_ms);
    }
  }
}
