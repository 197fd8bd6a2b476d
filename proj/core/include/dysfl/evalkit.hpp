// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dysfl/model.hpp"
#include "dysfl/types.hpp"

namespace dysfl::evalkit {

struct DecodeConfig {
  double conf_threshold = 0.5;
  double nms_iou = 0.5;
  int max_detections = 16;
  int pad_time = 256;  // frames; denormalizes bounds to milliseconds

  void validate() const;
};

/// Regions above the confidence threshold become candidate events with
/// denormalized global bounds and the argmax class; candidates then pass
/// through class-agnostic 1-D non-maximum suppression (highest confidence
/// kept). Output is sorted by start time.
std::vector<DysfluencyEvent> decode(const detector::DetectionGrid& grid,
                                    const DecodeConfig& cfg);

/// Greedy one-to-one matching by descending overlap; each side used at most
/// once and only overlapping pairs match.
struct Matching {
  std::vector<std::pair<int, int>> pairs;  // (gt index, pred index)
};
Matching match_events(const std::vector<DysfluencyEvent>& gt,
                      const std::vector<DysfluencyEvent>& pred);

/// A true positive is any matched pair with nonzero intersection.
struct F1Result {
  double f1 = 0, precision = 0, recall = 0;
  int tp = 0, fp = 0, fn = 0;
};
F1Result time_f1(const std::vector<DysfluencyEvent>& gt,
                 const std::vector<DysfluencyEvent>& pred);

/// Over ground-truth events that have at least one overlapping prediction,
/// the fraction whose best-overlap prediction carries the same type.
struct TypeAccuracy {
  int matched = 0;
  int correct = 0;
  std::array<int, kNumDysfluencyTypes> per_type_matched{};
  std::array<int, kNumDysfluencyTypes> per_type_correct{};

  double overall_pct() const { return matched > 0 ? 100.0 * correct / matched : 0.0; }
};
TypeAccuracy type_accuracy(const std::vector<DysfluencyEvent>& gt,
                           const std::vector<DysfluencyEvent>& pred);

/// Boundary error over matched pairs, in frame units (20 ms) then converted
/// back to milliseconds: RMSE reading, with MAE exposed alongside. Absent
/// when nothing matched.
struct BoundLossStats {
  double rmse_ms = 0;
  double mae_ms = 0;
  int pairs = 0;
};
std::optional<BoundLossStats> bound_loss_ms(const std::vector<DysfluencyEvent>& gt,
                                            const std::vector<DysfluencyEvent>& pred);

/// Phoneme error rate: unit-cost Levenshtein distance divided by |ref|.
double per(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

struct TypeStats {
  int gt_events = 0;
  int matched = 0;
  int correct = 0;
  double accuracy_pct = 0;
  bool has_accuracy = false;
  double bound_rmse_ms = 0;
  double bound_mae_ms = 0;
  int bound_pairs = 0;
};

struct EvalReport {
  int n_utterances = 0;
  int n_gt_events = 0;
  int n_pred_events = 0;
  int tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, time_f1 = 0;
  double accuracy_pct = 0;
  bool has_accuracy = false;
  double bound_rmse_ms = 0;
  double bound_mae_ms = 0;
  int bound_pairs = 0;
  std::array<TypeStats, kNumDysfluencyTypes> per_type{};
  std::vector<std::pair<std::string, EvalReport>> per_language;
};

/// Corpus-level evaluation: per-utterance matching, pooled counts. An id
/// missing from `preds` counts as an empty prediction list; a prediction id
/// absent from the ground truth is an error.
EvalReport evaluate(const std::vector<Utterance>& gt,
                    const std::map<std::string, std::vector<DysfluencyEvent>>& preds);

std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);
/// Text table, one row per dysfluency type with accuracy and bound loss.
std::string render_table(const EvalReport& report);

/// Predictions file: JSONL of {"id": ..., "events": [...]} records.
void save_predictions(const std::vector<std::pair<std::string, std::vector<DysfluencyEvent>>>& preds,
                      const std::filesystem::path& path);
std::map<std::string, std::vector<DysfluencyEvent>> load_predictions(
    const std::filesystem::path& path);

}  // namespace dysfl::evalkit
