// SPDX-License-Identifier: Apache-2.0
#include "dysfl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dysfl/manifest.hpp"
#include "dysfl/tensor_io.hpp"
#include "json_config.hpp"

namespace dysfl::pipeline {

namespace {

using nlohmann::json;

// Stage seed derivation keys; children of the experiment seed.
constexpr u64 kSeedBase = 0xB1;
constexpr u64 kSeedCorpus = 0xC2;
constexpr u64 kSeedRender = 0xD3;
constexpr u64 kSeedModel = 0xE4;
constexpr u64 kSeedTrain = 0xF5;
constexpr u64 kSeedSplit = 0xA6;

u64 stage_seed(u64 seed, u64 key) { return RandomStream(seed).child(key).seed(); }

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
  throw DataError("pipeline stage '" + stage + "' failed: " + e.what());
}

void log_stage(bool verbose, const std::string& msg) {
  if (verbose) std::fprintf(stderr, "[pipeline] %s\n", msg.c_str());
}

}  // namespace

void CorpusConfig::validate() const {
  if (size == 0) throw DataError("corpus config: size must be positive");
  if (english_share < 0.0 || english_share > 1.0) {
    throw DataError("corpus config: english_share must be in [0,1]");
  }
  mix.validate();
}

void ExperimentConfig::validate() const {
  if (!seed_set) throw DataError("experiment config: seed is mandatory");
  if (schema_version != 1) {
    throw DataError("experiment config: unsupported schema_version " +
                    std::to_string(schema_version));
  }
  corpus.validate();
  render.validate();
  model.validate();
  loss.validate();
  train.validate();
  decode.validate();
  if (train_split <= 0.0 || train_split >= 1.0) {
    throw DataError("experiment config: train_split must be in (0,1)");
  }
  if (out_dir.empty()) throw DataError("experiment config: out_dir is required");
  if (model.pad_text != render.pad_text || model.pad_time != render.pad_time) {
    throw DataError("experiment config: model and render pad sizes disagree");
  }
  if (decode.pad_time != render.pad_time) {
    throw DataError("experiment config: decode pad_time must match render pad_time");
  }
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment config: malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    detail::maybe(j, "schema_version", cfg.schema_version);
    if (j.contains("seed")) {
      cfg.seed = j.at("seed").get<u64>();
      cfg.seed_set = true;
    }
    if (j.contains("corpus")) {
      const json& cj = j.at("corpus");
      detail::maybe(cj, "size", cfg.corpus.size);
      detail::maybe(cj, "english_share", cfg.corpus.english_share);
      if (cj.contains("mix")) cfg.corpus.mix = detail::mix_config_from_json(cj.at("mix"));
    }
    if (j.contains("render")) cfg.render = detail::render_config_from_json(j.at("render"));
    if (j.contains("model")) cfg.model = detail::model_config_from_json(j.at("model"));
    if (j.contains("loss")) cfg.loss = detail::loss_config_from_json(j.at("loss"));
    if (j.contains("train")) cfg.train = detail::train_config_from_json(j.at("train"));
    if (j.contains("decode")) {
      const json& dj = j.at("decode");
      detail::maybe(dj, "conf_threshold", cfg.decode.conf_threshold);
      detail::maybe(dj, "nms_iou", cfg.decode.nms_iou);
      detail::maybe(dj, "max_detections", cfg.decode.max_detections);
    }
    detail::maybe(j, "train_split", cfg.train_split);
    detail::maybe(j, "out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment config: bad field: ") + e.what());
  }
  cfg.decode.pad_time = cfg.render.pad_time;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

std::string ExperimentConfig::to_json_string() const {
  json j{{"schema_version", schema_version},
         {"seed", seed},
         {"corpus",
          {{"size", corpus.size},
           {"english_share", corpus.english_share},
           {"mix", detail::to_json(corpus.mix)}}},
         {"render", detail::to_json(render)},
         {"model", detail::to_json(model)},
         {"loss", detail::to_json(loss)},
         {"train", detail::to_json(train)},
         {"decode",
          {{"conf_threshold", decode.conf_threshold},
           {"nms_iou", decode.nms_iou},
           {"max_detections", decode.max_detections},
           {"pad_time", decode.pad_time}}},
         {"train_split", train_split},
         {"out_dir", out_dir}};
  return j.dump(2);
}

std::vector<Utterance> make_base_corpus(const CorpusConfig& cfg, u64 seed) {
  const RandomStream master(seed);
  const auto n_english =
      static_cast<std::size_t>(std::llround(cfg.english_share * static_cast<double>(cfg.size)));
  std::vector<Utterance> base;
  base.reserve(cfg.size);
  char id[32];
  for (std::size_t i = 0; i < cfg.size; ++i) {
    const Language lang = i < n_english ? Language::English : Language::Mandarin;
    RandomStream rng = master.child(i);
    if (lang == Language::English) {
      std::snprintf(id, sizeof(id), "en%05zu", i);
    } else {
      std::snprintf(id, sizeof(id), "zh%05zu", i);
    }
    base.push_back(textsim::sample_fluent(TokenInventory::for_language(lang),
                                          textsim::FluentParams::for_language(lang), id, rng));
  }
  return base;
}

void render_corpus(const std::vector<Utterance>& corpus,
                   const alignsynth::RenderConfig& render_cfg, u64 seed,
                   const std::filesystem::path& dir, int regions) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const RandomStream master(seed);
  std::ofstream targets(dir / "targets.jsonl", std::ios::trunc);
  if (!targets) throw DataError("cannot write targets.jsonl in " + dir.string());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Utterance& utt = corpus[i];
    RandomStream rng = master.child(i);
    const alignsynth::AlignmentMatrix m = alignsynth::render(utt, render_cfg, rng);
    write_matrix(Eigen::MatrixXf(m.values.cast<float>()), dir / (utt.id + ".stsf"));
    const std::vector<RegionTarget> t =
        alignsynth::events_to_targets(utt, render_cfg.pad_time, regions);
    json rows = json::array();
    for (const RegionTarget& r : t) {
      json row = json::array({r.obj, r.b_start, r.b_end});
      for (double c : r.class_onehot) row.push_back(c);
      rows.push_back(std::move(row));
    }
    targets << json{{"id", utt.id}, {"targets", std::move(rows)}}.dump() << '\n';
  }
}

std::vector<RegionTarget> targets_from_json_line(const std::string& line, std::string* id_out) {
  try {
    const json j = json::parse(line);
    if (id_out != nullptr) *id_out = j.at("id").get<std::string>();
    std::vector<RegionTarget> targets;
    for (const json& row : j.at("targets")) {
      if (row.size() != 3 + kNumDysfluencyTypes) {
        throw DataError("targets row has wrong arity");
      }
      RegionTarget t;
      t.obj = row[0].get<double>();
      t.b_start = row[1].get<double>();
      t.b_end = row[2].get<double>();
      for (int c = 0; c < kNumDysfluencyTypes; ++c) {
        t.class_onehot[static_cast<std::size_t>(c)] =
            row[static_cast<std::size_t>(3 + c)].get<double>();
      }
      targets.push_back(t);
    }
    return targets;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad targets line: ") + e.what());
  }
}

std::vector<detector::TrainSample> load_rendered(
    const std::filesystem::path& dir, const std::vector<std::string>& ids,
    const detector::DetectorModel& model,
    const std::map<std::string, Language>& languages) {
  std::ifstream is(dir / "targets.jsonl");
  if (!is) throw DataError("cannot open " + (dir / "targets.jsonl").string());
  std::map<std::string, std::vector<RegionTarget>> by_id;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::string id;
    std::vector<RegionTarget> t = targets_from_json_line(line, &id);
    by_id[id] = std::move(t);
  }
  std::vector<detector::TrainSample> samples;
  samples.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("no targets for utterance '" + id + "'");
    detector::TrainSample s;
    s.id = id;
    const auto lang_it = languages.find(id);
    s.language = lang_it != languages.end() ? lang_it->second : Language::English;
    alignsynth::AlignmentMatrix am;
    am.values = read_matrix_d(dir / (id + ".stsf"));
    am.text_len = static_cast<int>(am.values.rows());
    am.time_len = static_cast<int>(am.values.cols());
    s.input = model.assemble_input(am);
    s.targets = std::move(it->second);
    samples.push_back(std::move(s));
  }
  return samples;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, bool verbose) {
  namespace fs = std::filesystem;
  cfg.validate();
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);

  // Stage 1-2: simulate.
  std::vector<Utterance> corpus;
  try {
    log_stage(verbose, "simulate: " + std::to_string(cfg.corpus.size) + " utterances");
    const std::vector<Utterance> base =
        make_base_corpus(cfg.corpus, stage_seed(cfg.seed, kSeedBase));
    save_manifest(base, out / "base.jsonl");
    corpus = textsim::generate_corpus(base, cfg.corpus.mix, cfg.corpus.size,
                                      stage_seed(cfg.seed, kSeedCorpus));
    save_manifest(corpus, out / "corpus.jsonl");
  } catch (const std::exception& e) {
    stage_fail("simulate", e);
  }

  // Stage 3: render.
  const fs::path aligns = out / "aligns";
  try {
    log_stage(verbose, "render: writing alignment matrices");
    render_corpus(corpus, cfg.render, stage_seed(cfg.seed, kSeedRender), aligns);
  } catch (const std::exception& e) {
    stage_fail("render", e);
  }

  // Stage 4: split.
  std::vector<std::string> train_ids, test_ids;
  try {
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    RandomStream split_rng(stage_seed(cfg.seed, kSeedSplit));
    split_rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(
        std::floor(cfg.train_split * static_cast<double>(corpus.size())));
    if (n_train == 0 || n_train == corpus.size()) {
      throw DataError("split leaves an empty side; adjust corpus size or train_split");
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_train ? train_ids : test_ids).push_back(corpus[order[i]].id);
    }
    std::sort(test_ids.begin(), test_ids.end());
    json split{{"train", train_ids}, {"test", test_ids}};
    std::ofstream os(out / "split.json", std::ios::trunc);
    os << split.dump(2) << '\n';
    log_stage(verbose, "split: " + std::to_string(train_ids.size()) + " train / " +
                           std::to_string(test_ids.size()) + " test");
  } catch (const std::exception& e) {
    stage_fail("split", e);
  }

  // Stage 5: train.
  const fs::path ckpt = out / "ckpt";
  try {
    std::map<std::string, Language> languages;
    for (const Utterance& u : corpus) languages[u.id] = u.language;
    detector::DetectorModel model(cfg.model, stage_seed(cfg.seed, kSeedModel));
    log_stage(verbose, "train: " + std::to_string(model.params().scalar_count()) +
                           " parameters, " + std::to_string(cfg.train.epochs) + " epochs");
    const std::vector<detector::TrainSample> samples =
        load_rendered(aligns, train_ids, model, languages);
    detector::TrainConfig train_cfg = cfg.train;
    train_cfg.seed = stage_seed(cfg.seed, kSeedTrain);
    const detector::TrainResult result = detector::train(model, samples, train_cfg, cfg.loss);
    json history = json::array();
    for (const detector::EpochStats& s : result.history) {
      history.push_back(json{
          {"total", s.total}, {"bound", s.bound}, {"conf", s.conf}, {"class", s.cls}});
      log_stage(verbose, "epoch " + std::to_string(history.size() - 1) +
                             ": loss " + std::to_string(s.total));
    }
    std::ofstream hs(out / "history.json", std::ios::trunc);
    hs << json{{"epochs", std::move(history)}, {"best_loss", result.best_loss}}.dump(2) << '\n';
    detector::save_checkpoint(model, ckpt);
  } catch (const NumericError&) {
    throw;
  } catch (const std::exception& e) {
    stage_fail("train", e);
  }

  // Stage 6: predict on the held-out split, from the saved checkpoint so the
  // standalone predict subcommand reproduces the same output.
  std::vector<std::pair<std::string, std::vector<DysfluencyEvent>>> preds;
  try {
    log_stage(verbose, "predict: " + std::to_string(test_ids.size()) + " held-out utterances");
    const detector::DetectorModel model = detector::load_checkpoint(ckpt);
    for (const std::string& id : test_ids) {
      alignsynth::AlignmentMatrix am;
      am.values = read_matrix_d(aligns / (id + ".stsf"));
      am.text_len = static_cast<int>(am.values.rows());
      am.time_len = static_cast<int>(am.values.cols());
      preds.emplace_back(id, evalkit::decode(model.predict(am), cfg.decode));
    }
    evalkit::save_predictions(preds, out / "preds.jsonl");
  } catch (const std::exception& e) {
    stage_fail("predict", e);
  }

  // Stage 7: evaluate.
  PipelineResult result;
  try {
    std::vector<Utterance> test_utts;
    std::map<std::string, std::vector<DysfluencyEvent>> pred_map;
    for (auto& [id, events] : preds) pred_map[id] = events;
    for (const Utterance& u : corpus) {
      if (std::binary_search(test_ids.begin(), test_ids.end(), u.id)) test_utts.push_back(u);
    }
    result.report = evalkit::evaluate(test_utts, pred_map);
    result.report_path = out / "report.json";
    result.checkpoint_dir = ckpt;
    evalkit::write_report(result.report, result.report_path);
    log_stage(verbose, "eval: report written");
  } catch (const std::exception& e) {
    stage_fail("eval", e);
  }
  return result;
}

}  // namespace dysfl::pipeline
