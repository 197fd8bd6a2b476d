// SPDX-License-Identifier: Apache-2.0
#include "dysfl/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dysfl::evalkit {

namespace {

i64 overlap_ms(const DysfluencyEvent& a, const DysfluencyEvent& b) {
  return std::max<i64>(0, std::min(a.end_ms, b.end_ms) - std::max(a.start_ms, b.start_ms));
}

double interval_iou(i64 a0, i64 a1, i64 b0, i64 b1) {
  const i64 inter = std::max<i64>(0, std::min(a1, b1) - std::max(a0, b0));
  const i64 uni = std::max(a1, b1) - std::min(a0, b0);
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace

void DecodeConfig::validate() const {
  if (conf_threshold < 0 || conf_threshold > 1 || nms_iou < 0 || nms_iou > 1) {
    throw DataError("decode config: thresholds must be in [0,1]");
  }
  if (max_detections < 1) throw DataError("decode config: max_detections must be positive");
  if (pad_time < 1) throw DataError("decode config: pad_time must be positive");
}

std::vector<DysfluencyEvent> decode(const detector::DetectionGrid& grid,
                                    const DecodeConfig& cfg) {
  cfg.validate();
  if (grid.values.cols() != detector::kGridCols) {
    throw DataError("decode: grid has wrong column count");
  }
  const double pad_ms = static_cast<double>(cfg.pad_time) * kMsPerFrame;

  struct Candidate {
    DysfluencyEvent event;
    double conf = 0;
    int region = 0;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < grid.regions(); ++i) {
    const double conf = grid.confidence(i);
    if (conf < cfg.conf_threshold) continue;
    const i64 start = std::llround(grid.b_start(i) * pad_ms);
    const i64 end = std::llround(grid.b_end(i) * pad_ms);
    if (end <= start) continue;
    Candidate c;
    c.event.type = static_cast<DysfluencyType>(grid.argmax_class(i));
    c.event.start_ms = start;
    c.event.end_ms = end;
    c.event.level = Level::Phoneme;
    c.conf = conf;
    c.region = i;
    cands.push_back(c);
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (a.event.start_ms != b.event.start_ms) return a.event.start_ms < b.event.start_ms;
    return a.region < b.region;
  });

  std::vector<DysfluencyEvent> kept;
  for (const Candidate& c : cands) {
    if (static_cast<int>(kept.size()) >= cfg.max_detections) break;
    bool suppressed = false;
    for (const DysfluencyEvent& k : kept) {
      if (interval_iou(c.event.start_ms, c.event.end_ms, k.start_ms, k.end_ms) >= cfg.nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(c.event);
  }
  std::sort(kept.begin(), kept.end(), [](const DysfluencyEvent& a, const DysfluencyEvent& b) {
    return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.end_ms < b.end_ms;
  });
  return kept;
}

Matching match_events(const std::vector<DysfluencyEvent>& gt,
                      const std::vector<DysfluencyEvent>& pred) {
  struct Entry {
    i64 overlap;
    int gi;
    int pi;
  };
  std::vector<Entry> entries;
  for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
    for (int p = 0; p < static_cast<int>(pred.size()); ++p) {
      const i64 ov = overlap_ms(gt[static_cast<std::size_t>(g)], pred[static_cast<std::size_t>(p)]);
      if (ov > 0) entries.push_back({ov, g, p});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.gi != b.gi) return a.gi < b.gi;
    return a.pi < b.pi;
  });
  Matching m;
  std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
  for (const Entry& e : entries) {
    if (gt_used[static_cast<std::size_t>(e.gi)] || pred_used[static_cast<std::size_t>(e.pi)]) {
      continue;
    }
    gt_used[static_cast<std::size_t>(e.gi)] = 1;
    pred_used[static_cast<std::size_t>(e.pi)] = 1;
    m.pairs.emplace_back(e.gi, e.pi);
  }
  return m;
}

F1Result time_f1(const std::vector<DysfluencyEvent>& gt,
                 const std::vector<DysfluencyEvent>& pred) {
  const Matching m = match_events(gt, pred);
  F1Result r;
  r.tp = static_cast<int>(m.pairs.size());
  r.fp = static_cast<int>(pred.size()) - r.tp;
  r.fn = static_cast<int>(gt.size()) - r.tp;
  r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

TypeAccuracy type_accuracy(const std::vector<DysfluencyEvent>& gt,
                           const std::vector<DysfluencyEvent>& pred) {
  TypeAccuracy acc;
  for (const DysfluencyEvent& g : gt) {
    i64 best_overlap = 0;
    const DysfluencyEvent* best = nullptr;
    for (const DysfluencyEvent& p : pred) {
      const i64 ov = overlap_ms(g, p);
      if (ov > best_overlap) {  // ties keep the earlier prediction
        best_overlap = ov;
        best = &p;
      }
    }
    if (best == nullptr) continue;
    const auto t = static_cast<std::size_t>(g.type);
    ++acc.matched;
    ++acc.per_type_matched[t];
    if (best->type == g.type) {
      ++acc.correct;
      ++acc.per_type_correct[t];
    }
  }
  return acc;
}

std::optional<BoundLossStats> bound_loss_ms(const std::vector<DysfluencyEvent>& gt,
                                            const std::vector<DysfluencyEvent>& pred) {
  const Matching m = match_events(gt, pred);
  if (m.pairs.empty()) return std::nullopt;
  double sq_sum = 0, abs_sum = 0;
  for (const auto& [gi, pi] : m.pairs) {
    const DysfluencyEvent& g = gt[static_cast<std::size_t>(gi)];
    const DysfluencyEvent& p = pred[static_cast<std::size_t>(pi)];
    const double ds = static_cast<double>(g.start_ms - p.start_ms) / kMsPerFrame;
    const double de = static_cast<double>(g.end_ms - p.end_ms) / kMsPerFrame;
    sq_sum += ds * ds + de * de;
    abs_sum += std::abs(ds) + std::abs(de);
  }
  const double n = 2.0 * static_cast<double>(m.pairs.size());
  BoundLossStats stats;
  stats.rmse_ms = std::sqrt(sq_sum / n) * kMsPerFrame;
  stats.mae_ms = abs_sum / n * kMsPerFrame;
  stats.pairs = static_cast<int>(m.pairs.size());
  return stats;
}

double per(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) throw DataError("per: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(n);
}

namespace {

struct BoundAccumulator {
  double sq_sum = 0;
  double abs_sum = 0;
  int pairs = 0;

  void add(const DysfluencyEvent& g, const DysfluencyEvent& p) {
    const double ds = static_cast<double>(g.start_ms - p.start_ms) / kMsPerFrame;
    const double de = static_cast<double>(g.end_ms - p.end_ms) / kMsPerFrame;
    sq_sum += ds * ds + de * de;
    abs_sum += std::abs(ds) + std::abs(de);
    ++pairs;
  }
  double rmse_ms() const {
    return pairs > 0 ? std::sqrt(sq_sum / (2.0 * pairs)) * kMsPerFrame : 0.0;
  }
  double mae_ms() const { return pairs > 0 ? abs_sum / (2.0 * pairs) * kMsPerFrame : 0.0; }
};

EvalReport evaluate_subset(const std::vector<const Utterance*>& gt,
                           const std::map<std::string, std::vector<DysfluencyEvent>>& preds) {
  EvalReport rep;
  TypeAccuracy acc_total;
  BoundAccumulator bounds_total;
  std::array<BoundAccumulator, kNumDysfluencyTypes> bounds_per_type{};
  static const std::vector<DysfluencyEvent> kNoEvents;

  for (const Utterance* utt : gt) {
    const auto it = preds.find(utt->id);
    const std::vector<DysfluencyEvent>& pred = it != preds.end() ? it->second : kNoEvents;
    ++rep.n_utterances;
    rep.n_gt_events += static_cast<int>(utt->events.size());
    rep.n_pred_events += static_cast<int>(pred.size());

    const Matching m = match_events(utt->events, pred);
    rep.tp += static_cast<int>(m.pairs.size());
    rep.fp += static_cast<int>(pred.size() - m.pairs.size());
    rep.fn += static_cast<int>(utt->events.size() - m.pairs.size());
    for (const auto& [gi, pi] : m.pairs) {
      const DysfluencyEvent& g = utt->events[static_cast<std::size_t>(gi)];
      const DysfluencyEvent& p = pred[static_cast<std::size_t>(pi)];
      bounds_total.add(g, p);
      bounds_per_type[static_cast<std::size_t>(g.type)].add(g, p);
    }

    const TypeAccuracy acc = type_accuracy(utt->events, pred);
    acc_total.matched += acc.matched;
    acc_total.correct += acc.correct;
    for (int t = 0; t < kNumDysfluencyTypes; ++t) {
      acc_total.per_type_matched[static_cast<std::size_t>(t)] +=
          acc.per_type_matched[static_cast<std::size_t>(t)];
      acc_total.per_type_correct[static_cast<std::size_t>(t)] +=
          acc.per_type_correct[static_cast<std::size_t>(t)];
    }
    for (const DysfluencyEvent& g : utt->events) {
      ++rep.per_type[static_cast<std::size_t>(g.type)].gt_events;
    }
  }

  rep.precision = (rep.tp + rep.fp) > 0 ? static_cast<double>(rep.tp) / (rep.tp + rep.fp) : 0.0;
  rep.recall = (rep.tp + rep.fn) > 0 ? static_cast<double>(rep.tp) / (rep.tp + rep.fn) : 0.0;
  rep.time_f1 = (rep.precision + rep.recall) > 0
                    ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                    : 0.0;
  rep.has_accuracy = acc_total.matched > 0;
  rep.accuracy_pct = acc_total.overall_pct();
  rep.bound_pairs = bounds_total.pairs;
  rep.bound_rmse_ms = bounds_total.rmse_ms();
  rep.bound_mae_ms = bounds_total.mae_ms();
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    TypeStats& ts = rep.per_type[ti];
    ts.matched = acc_total.per_type_matched[ti];
    ts.correct = acc_total.per_type_correct[ti];
    ts.has_accuracy = ts.matched > 0;
    ts.accuracy_pct = ts.matched > 0 ? 100.0 * ts.correct / ts.matched : 0.0;
    ts.bound_pairs = bounds_per_type[ti].pairs;
    ts.bound_rmse_ms = bounds_per_type[ti].rmse_ms();
    ts.bound_mae_ms = bounds_per_type[ti].mae_ms();
  }
  return rep;
}

}  // namespace

EvalReport evaluate(const std::vector<Utterance>& gt,
                    const std::map<std::string, std::vector<DysfluencyEvent>>& preds) {
  std::map<std::string, int> known;
  for (const Utterance& u : gt) ++known[u.id];
  for (const auto& [id, events] : preds) {
    if (!known.count(id)) throw DataError("evaluate: prediction for unknown utterance '" + id + "'");
  }
  std::vector<const Utterance*> all;
  std::map<std::string, std::vector<const Utterance*>> by_language;
  for (const Utterance& u : gt) {
    all.push_back(&u);
    by_language[std::string(to_string(u.language))].push_back(&u);
  }
  EvalReport rep = evaluate_subset(all, preds);
  if (by_language.size() > 1) {
    for (const auto& [lang, utts] : by_language) {
      rep.per_language.emplace_back(lang, evaluate_subset(utts, preds));
    }
  }
  return rep;
}

namespace {

using nlohmann::json;

json report_to_json_obj(const EvalReport& rep) {
  json per_type = json::object();
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    const TypeStats& ts = rep.per_type[static_cast<std::size_t>(t)];
    json entry{{"gt_events", ts.gt_events},
               {"matched", ts.matched},
               {"correct", ts.correct},
               {"bound_pairs", ts.bound_pairs}};
    if (ts.has_accuracy) entry["accuracy_pct"] = ts.accuracy_pct;
    if (ts.bound_pairs > 0) {
      entry["bound_rmse_ms"] = ts.bound_rmse_ms;
      entry["bound_mae_ms"] = ts.bound_mae_ms;
    }
    per_type[std::string(to_string(static_cast<DysfluencyType>(t)))] = std::move(entry);
  }
  json j{{"schema_version", 1},
         {"n_utterances", rep.n_utterances},
         {"n_gt_events", rep.n_gt_events},
         {"n_pred_events", rep.n_pred_events},
         {"counts", {{"tp", rep.tp}, {"fp", rep.fp}, {"fn", rep.fn}}},
         {"precision", rep.precision},
         {"recall", rep.recall},
         {"time_f1", rep.time_f1},
         {"bound_pairs", rep.bound_pairs},
         {"per_type", std::move(per_type)}};
  if (rep.has_accuracy) j["accuracy_pct"] = rep.accuracy_pct;
  if (rep.bound_pairs > 0) {
    j["bound_rmse_ms"] = rep.bound_rmse_ms;
    j["bound_mae_ms"] = rep.bound_mae_ms;
  }
  if (!rep.per_language.empty()) {
    json langs = json::object();
    for (const auto& [lang, sub] : rep.per_language) {
      langs[lang] = report_to_json_obj(sub);
    }
    j["per_language"] = std::move(langs);
  }
  return j;
}

EvalReport report_from_json_obj(const json& j) {
  EvalReport rep;
  rep.n_utterances = j.at("n_utterances").get<int>();
  rep.n_gt_events = j.at("n_gt_events").get<int>();
  rep.n_pred_events = j.at("n_pred_events").get<int>();
  rep.tp = j.at("counts").at("tp").get<int>();
  rep.fp = j.at("counts").at("fp").get<int>();
  rep.fn = j.at("counts").at("fn").get<int>();
  rep.precision = j.at("precision").get<double>();
  rep.recall = j.at("recall").get<double>();
  rep.time_f1 = j.at("time_f1").get<double>();
  rep.bound_pairs = j.at("bound_pairs").get<int>();
  if (j.contains("accuracy_pct")) {
    rep.has_accuracy = true;
    rep.accuracy_pct = j.at("accuracy_pct").get<double>();
  }
  if (j.contains("bound_rmse_ms")) {
    rep.bound_rmse_ms = j.at("bound_rmse_ms").get<double>();
    rep.bound_mae_ms = j.at("bound_mae_ms").get<double>();
  }
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    const auto key = std::string(to_string(static_cast<DysfluencyType>(t)));
    if (!j.at("per_type").contains(key)) continue;
    const json& entry = j.at("per_type").at(key);
    TypeStats& ts = rep.per_type[static_cast<std::size_t>(t)];
    ts.gt_events = entry.at("gt_events").get<int>();
    ts.matched = entry.at("matched").get<int>();
    ts.correct = entry.at("correct").get<int>();
    ts.bound_pairs = entry.at("bound_pairs").get<int>();
    if (entry.contains("accuracy_pct")) {
      ts.has_accuracy = true;
      ts.accuracy_pct = entry.at("accuracy_pct").get<double>();
    }
    if (entry.contains("bound_rmse_ms")) {
      ts.bound_rmse_ms = entry.at("bound_rmse_ms").get<double>();
      ts.bound_mae_ms = entry.at("bound_mae_ms").get<double>();
    }
  }
  if (j.contains("per_language")) {
    for (const auto& [lang, sub] : j.at("per_language").items()) {
      rep.per_language.emplace_back(lang, report_from_json_obj(sub));
    }
  }
  return rep;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  return report_to_json_obj(report).dump(2);
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write report: " + path.string());
  os << report_to_json(report) << '\n';
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open report: " + path.string());
  try {
    return report_from_json_obj(json::parse(is));
  } catch (const json::exception& e) {
    throw DataError("bad report file " + path.string() + ": " + e.what());
  }
}

namespace {

std::string fmt(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string render_table(const EvalReport& report) {
  std::ostringstream os;
  char line[128];
  os << "type          acc%     bl(ms)   events\n";
  os << "------------  -------  -------  ------\n";
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    const TypeStats& ts = report.per_type[static_cast<std::size_t>(t)];
    const std::string acc = ts.has_accuracy ? fmt(ts.accuracy_pct, 2) : "-";
    const std::string bl = ts.bound_pairs > 0 ? fmt(ts.bound_rmse_ms, 1) : "-";
    std::snprintf(line, sizeof(line), "%-12s  %-7s  %-7s  %6d\n",
                  std::string(to_string(static_cast<DysfluencyType>(t))).c_str(), acc.c_str(),
                  bl.c_str(), ts.gt_events);
    os << line;
  }
  const std::string acc = report.has_accuracy ? fmt(report.accuracy_pct, 2) : "-";
  const std::string bl = report.bound_pairs > 0 ? fmt(report.bound_rmse_ms, 1) : "-";
  std::snprintf(line, sizeof(line), "overall       %-7s  %-7s  %6d\n", acc.c_str(), bl.c_str(),
                report.n_gt_events);
  os << line;
  std::snprintf(line, sizeof(line), "time_f1 %.4f  (tp=%d fp=%d fn=%d)\n", report.time_f1,
                report.tp, report.fp, report.fn);
  os << line;
  for (const auto& [lang, sub] : report.per_language) {
    os << "\n[" << lang << "]\n" << render_table(sub);
  }
  return os.str();
}

void save_predictions(
    const std::vector<std::pair<std::string, std::vector<DysfluencyEvent>>>& preds,
    const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write predictions: " + path.string());
  for (const auto& [id, events] : preds) {
    json evs = json::array();
    for (const DysfluencyEvent& ev : events) {
      evs.push_back(json{{"type", to_string(ev.type)},
                         {"start_ms", ev.start_ms},
                         {"end_ms", ev.end_ms},
                         {"level", to_string(ev.level)}});
    }
    os << json{{"id", id}, {"events", std::move(evs)}}.dump() << '\n';
  }
}

std::map<std::string, std::vector<DysfluencyEvent>> load_predictions(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open predictions: " + path.string());
  std::map<std::string, std::vector<DysfluencyEvent>> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<DysfluencyEvent> events;
      for (const json& ej : j.at("events")) {
        DysfluencyEvent ev;
        ev.type = dysfluency_type_from_string(ej.at("type").get<std::string>());
        ev.start_ms = ej.at("start_ms").get<i64>();
        ev.end_ms = ej.at("end_ms").get<i64>();
        if (ej.contains("level")) ev.level = level_from_string(ej.at("level").get<std::string>());
        events.push_back(ev);
      }
      preds[j.at("id").get<std::string>()] = std::move(events);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return preds;
}

}  // namespace dysfl::evalkit
