// SPDX-License-Identifier: Apache-2.0
#include "dysfl/manifest.hpp"

#include <fstream>
#include <string>

#include "json.hpp"

namespace dysfl {

namespace {

using nlohmann::json;

json event_to_json(const DysfluencyEvent& ev) {
  return json{
      {"type", to_string(ev.type)},
      {"start_ms", ev.start_ms},
      {"end_ms", ev.end_ms},
      {"level", to_string(ev.level)},
  };
}

DysfluencyEvent event_from_json(const json& j) {
  DysfluencyEvent ev;
  ev.type = dysfluency_type_from_string(j.at("type").get<std::string>());
  ev.start_ms = j.at("start_ms").get<i64>();
  ev.end_ms = j.at("end_ms").get<i64>();
  ev.level = level_from_string(j.at("level").get<std::string>());
  return ev;
}

json utterance_to_json(const Utterance& utt) {
  json tokens = json::array();
  for (const Token& tok : utt.tokens) {
    tokens.push_back(json{
        {"symbol", tok.symbol},
        {"is_vowel", tok.is_vowel},
        {"word_index", tok.word_index},
    });
  }
  json events = json::array();
  for (const DysfluencyEvent& ev : utt.events) events.push_back(event_to_json(ev));
  return json{
      {"id", utt.id},
      {"language", to_string(utt.language)},
      {"tokens", std::move(tokens)},
      {"durations_ms", utt.durations_ms},
      {"events", std::move(events)},
  };
}

Utterance utterance_from_json(const json& j) {
  Utterance utt;
  utt.id = j.at("id").get<std::string>();
  utt.language = language_from_string(j.at("language").get<std::string>());
  for (const json& tj : j.at("tokens")) {
    Token tok;
    tok.symbol = tj.at("symbol").get<std::string>();
    tok.is_vowel = tj.at("is_vowel").get<bool>();
    tok.word_index = tj.at("word_index").get<u32>();
    utt.tokens.push_back(std::move(tok));
  }
  utt.durations_ms = j.at("durations_ms").get<std::vector<i64>>();
  for (const json& ej : j.at("events")) utt.events.push_back(event_from_json(ej));
  return utt;
}

}  // namespace

std::vector<Utterance> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path.string());
  std::vector<Utterance> utts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    try {
      Utterance utt = utterance_from_json(j);
      validate(utt);
      utts.push_back(std::move(utt));
    } catch (const json::exception& e) {
      throw DataError(where + ": bad record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return utts;
}

void save_manifest(const std::vector<Utterance>& utts, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  for (const Utterance& utt : utts) {
    os << utterance_to_json(utt).dump() << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace dysfl
