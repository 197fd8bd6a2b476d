// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "dysfl/alignsynth.hpp"
#include "dysfl/evalkit.hpp"
#include "dysfl/loss.hpp"
#include "dysfl/model.hpp"
#include "dysfl/textsim.hpp"
#include "dysfl/train.hpp"

namespace dysfl::pipeline {

struct CorpusConfig {
  std::size_t size = 2000;
  double english_share = 1.0;  // remainder is Mandarin
  textsim::MixConfig mix;

  void validate() const;
};

/// One JSON document drives a full experiment; the seed is mandatory.
struct ExperimentConfig {
  int schema_version = 1;
  u64 seed = 0;
  bool seed_set = false;
  CorpusConfig corpus;
  alignsynth::RenderConfig render;
  detector::ModelConfig model = detector::ModelConfig::desk_default();
  detector::LossConfig loss;
  detector::TrainConfig train;
  evalkit::DecodeConfig decode;
  double train_split = 0.9;
  std::string out_dir;

  void validate() const;
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json_string() const;
};

struct PipelineResult {
  evalkit::EvalReport report;
  std::filesystem::path report_path;
  std::filesystem::path checkpoint_dir;
};

/// simulate -> render -> split -> train -> predict -> eval. Every artifact
/// lands under out_dir (base.jsonl, corpus.jsonl, aligns/, targets.jsonl,
/// split.json, ckpt/, preds.jsonl, history.json, report.json) in formats the
/// standalone subcommands consume. Reruns with the same config and seed are
/// byte-identical; the report itself contains no paths or timestamps.
PipelineResult run_pipeline(const ExperimentConfig& cfg, bool verbose = true);

// Stage helpers shared with the CLI subcommands.

/// Fluent base corpus: ids en#####/zh##### with per-index child seeds.
std::vector<Utterance> make_base_corpus(const CorpusConfig& cfg, u64 seed);

/// Renders every utterance (child seed per index), writes `<id>.stsf` files
/// plus a targets.jsonl sidecar into dir.
void render_corpus(const std::vector<Utterance>& corpus,
                   const alignsynth::RenderConfig& render_cfg, u64 seed,
                   const std::filesystem::path& dir, int regions = detector::kNumRegions);

/// Reads rendered matrices + targets back as training samples.
std::vector<detector::TrainSample> load_rendered(
    const std::filesystem::path& dir, const std::vector<std::string>& ids,
    const detector::DetectorModel& model,
    const std::map<std::string, Language>& languages);

std::vector<RegionTarget> targets_from_json_line(const std::string& line, std::string* id_out);

}  // namespace dysfl::pipeline
