// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>

#include "doctest.h"
#include "dysfl/inventory.hpp"
#include "dysfl/manifest.hpp"
#include "dysfl/rng.hpp"
#include "dysfl/tensor_io.hpp"
#include "dysfl/types.hpp"
#include "support/test_util.hpp"

using namespace dysfl;

TEST_CASE("enum codes are stable") {
  CHECK(static_cast<int>(DysfluencyType::Repetition) == 0);
  CHECK(static_cast<int>(DysfluencyType::Missing) == 1);
  CHECK(static_cast<int>(DysfluencyType::Block) == 2);
  CHECK(static_cast<int>(DysfluencyType::Replace) == 3);
  CHECK(static_cast<int>(DysfluencyType::Prolongation) == 4);
  for (DysfluencyType t : kAllDysfluencyTypes) {
    CHECK(dysfluency_type_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(dysfluency_type_from_string("insertion"), DataError);
}

TEST_CASE("utterance validation catches bad records") {
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 150});
  CHECK_NOTHROW(validate(utt));

  SUBCASE("length mismatch") {
    utt.durations_ms.pop_back();
    CHECK_THROWS_WITH_AS(validate(utt), doctest::Contains("length mismatch"), DataError);
  }
  SUBCASE("non-positive duration") {
    utt.durations_ms[1] = 0;
    CHECK_THROWS_WITH_AS(validate(utt), doctest::Contains("positive"), DataError);
  }
  SUBCASE("inverted event bounds") {
    utt.events.push_back({DysfluencyType::Block, 500, 300, Level::Phoneme});
    CHECK_THROWS_WITH_AS(validate(utt), doctest::Contains("start_ms"), DataError);
  }
  SUBCASE("event beyond utterance span") {
    utt.events.push_back({DysfluencyType::Block, 100, 900, Level::Phoneme});
    CHECK_THROWS_WITH_AS(validate(utt), doctest::Contains("exceeds"), DataError);
  }
  SUBCASE("character level on English") {
    utt.events.push_back({DysfluencyType::Block, 0, 100, Level::Character});
    CHECK_THROWS_AS(validate(utt), DataError);
  }
  SUBCASE("unsorted events") {
    utt.events.push_back({DysfluencyType::Block, 200, 300, Level::Phoneme});
    utt.events.push_back({DysfluencyType::Missing, 0, 100, Level::Phoneme});
    CHECK_THROWS_WITH_AS(validate(utt), doctest::Contains("sorted"), DataError);
  }
}

TEST_CASE("seeded rng: identical seeds give identical streams") {
  RandomStream a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("seeded rng: different seeds diverge within 100 draws") {
  RandomStream a(1234), c(1235);
  bool differ = false;
  for (int i = 0; i < 100 && !differ; ++i) differ = a.next_u64() != c.next_u64();
  CHECK(differ);
}

TEST_CASE("seeded rng: derived children are reproducible and independent") {
  RandomStream parent(99);
  RandomStream c1 = parent.child(7);
  RandomStream c2 = RandomStream(99).child(7);
  for (int i = 0; i < 20; ++i) CHECK(c1.next_u64() == c2.next_u64());
  RandomStream c3 = parent.child(8);
  bool differ = false;
  RandomStream c4 = parent.child(7);
  for (int i = 0; i < 20 && !differ; ++i) differ = c3.next_u64() != c4.next_u64();
  CHECK(differ);
}

TEST_CASE("rng helpers stay in range") {
  RandomStream rng(42);
  for (int i = 0; i < 1000; ++i) {
    const i64 v = rng.uniform_int(3, 9);
    CHECK(v >= 3);
    CHECK(v <= 9);
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("inventories are well-formed") {
  CHECK_NOTHROW(TokenInventory::english().validate());
  CHECK_NOTHROW(TokenInventory::mandarin().validate());
  CHECK(TokenInventory::english().is_vowel("ae"));
  CHECK_FALSE(TokenInventory::english().is_vowel("k"));
  CHECK(TokenInventory::mandarin().is_vowel("ma"));
}

TEST_CASE("tensor file: 1x1 matrix is a 29-byte file that round-trips") {
  testutil::TempDir dir("tensor");
  const auto path = dir.path() / "one.stsf";
  Eigen::MatrixXf m(1, 1);
  m(0, 0) = 0.0f;
  write_matrix(m, path);
  CHECK(std::filesystem::file_size(path) == 29);  // 4+4+1+2*8+4
  const Eigen::MatrixXf back = read_matrix(path);
  CHECK(back.rows() == 1);
  CHECK(back(0, 0) == 0.0f);
}

TEST_CASE("tensor file: distinct values round-trip bit-exactly") {
  testutil::TempDir dir("tensor2");
  const auto path = dir.path() / "m.stsf";
  Eigen::MatrixXf m(2, 3);
  m << 1.5f, -2.25f, 3.0e-8f, 4.0f, -0.0f, 6.625f;
  write_matrix(m, path);
  const Eigen::MatrixXf back = read_matrix(path);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(m(r, c) == back(r, c));
  }
}

TEST_CASE("tensor file: random payload round-trips bit-exactly") {
  testutil::TempDir dir("tensor3");
  RandomStream rng(7);
  TensorData data;
  data.dims = {3, 4, 5};
  for (int i = 0; i < 60; ++i) data.values.push_back(static_cast<float>(rng.normal()));
  const auto path = dir.path() / "t.stsf";
  write_tensor(data, path);
  const TensorData back = read_tensor(path);
  CHECK(back.dims == data.dims);
  CHECK(back.values == data.values);
}

TEST_CASE("tensor file errors") {
  testutil::TempDir dir("tensor4");
  const auto path = dir.path() / "bad.stsf";
  SUBCASE("bad magic") {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE1234567890";
    os.close();
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("magic"), DataError);
  }
  SUBCASE("truncated payload") {
    Eigen::MatrixXf m(2, 3);
    m.setOnes();
    write_matrix(m, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("truncated"), DataError);
  }
  SUBCASE("oversized payload") {
    Eigen::MatrixXf m(2, 3);
    m.setOnes();
    write_matrix(m, path);
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os << "XXXX";
    os.close();
    CHECK_THROWS_WITH_AS(read_tensor(path), doctest::Contains("larger"), DataError);
  }
  SUBCASE("non-finite payload rejected") {
    TensorData data;
    data.dims = {1};
    data.values = {std::numeric_limits<float>::infinity()};
    CHECK_THROWS_AS(write_tensor(data, path), DataError);
  }
}

TEST_CASE("manifest: empty file loads to empty corpus") {
  testutil::TempDir dir("manifest");
  const auto path = dir.path() / "empty.jsonl";
  std::ofstream(path).close();
  CHECK(load_manifest(path).empty());
}

TEST_CASE("manifest: single record without events") {
  testutil::TempDir dir("manifest1");
  const auto path = dir.path() / "one.jsonl";
  Utterance utt = testutil::make_utterance({"k", "ae", "t"}, {100, 200, 150});
  save_manifest({utt}, path);
  const auto back = load_manifest(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == utt);
  CHECK(back[0].events.empty());
}

TEST_CASE("manifest: invalid record names the line") {
  testutil::TempDir dir("manifest2");
  const auto path = dir.path() / "bad.jsonl";
  Utterance good = testutil::make_utterance({"k"}, {100});
  Utterance bad = testutil::make_utterance({"k", "ae"}, {100, 200});
  bad.events.push_back({DysfluencyType::Block, 500, 300, Level::Phoneme});
  {
    std::ofstream os(path);
    save_manifest({good}, path);
    // Append the invalid record by hand so save's own validation cannot help.
  }
  std::vector<Utterance> both = {good, bad};
  // save_manifest does not validate; loading must reject line 2.
  save_manifest(both, path);
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains(":2:"), DataError);
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("start_ms"), DataError);
}

TEST_CASE("manifest: malformed JSON names the line") {
  testutil::TempDir dir("manifest3");
  const auto path = dir.path() / "garbage.jsonl";
  std::ofstream os(path);
  os << "{\"id\": \"ok\"  but not json\n";
  os.close();
  CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains(":1:"), DataError);
}

TEST_CASE("manifest: 100 random utterances round-trip exactly") {
  testutil::TempDir dir("manifest4");
  const auto path = dir.path() / "many.jsonl";
  std::vector<Utterance> utts;
  for (int i = 0; i < 100; ++i) {
    const Language lang = i % 3 == 0 ? Language::Mandarin : Language::English;
    Utterance u = testutil::random_fluent(static_cast<u64>(i), lang);
    u.id = "u" + std::to_string(i);
    if (i % 4 == 0 && u.total_duration_ms() > 100) {
      u.events.push_back({DysfluencyType::Prolongation, 10, 90,
                          lang == Language::Mandarin ? Level::Character : Level::Phoneme});
    }
    utts.push_back(std::move(u));
  }
  save_manifest(utts, path);
  const auto back = load_manifest(path);
  REQUIRE(back.size() == utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) CHECK(back[i] == utts[i]);
}
