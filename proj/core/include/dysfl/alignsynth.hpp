// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "dysfl/rng.hpp"
#include "dysfl/types.hpp"

namespace dysfl::alignsynth {

/// Renderer settings. The raw matrix holds band energies (peak_gain at the
/// active text row); the softmax in preprocess() turns them into per-column
/// attention distributions.
struct RenderConfig {
  int band_width = 3;        // odd; center row plus (band_width-1)/2 shoulders
  double noise_scale = 0.0;  // additive Gaussian noise, clipped at zero
  int pad_text = 64;         // fixed text-axis size
  int pad_time = 256;        // fixed time-axis size, 20 ms columns
  double peak_gain = 6.0;

  void validate() const;
};

/// Soft speech-text alignment: text rows by time columns, padded with zeros
/// to (pad_text, pad_time). text_len/time_len give the populated extent.
struct AlignmentMatrix {
  Eigen::MatrixXd values;
  int text_len = 0;
  int time_len = 0;
};

/// One row of the rendered text axis. Repetition copies collapse onto the
/// rows of the first copy; removed material keeps a phantom row that never
/// dominates a column.
struct TextAxisRow {
  std::string symbol;
  bool is_pause = false;
  bool is_phantom = false;
};

struct TextAxis {
  std::vector<TextAxisRow> rows;
  std::vector<int> row_of_token;        // token index -> row index
  std::vector<int> copy_of_token;       // repetition copy ordinal, 0 = first
  std::vector<char> copy_start_of_token;  // 1 when token begins a copy
  std::vector<int> event_of_token;      // owning event index or -1
  std::vector<int> phantom_of_event;    // event index -> phantom row or -1
  std::vector<int> range_first_of_event;  // event index -> first covered token or -1
  std::vector<int> period_of_event;     // repetition copy length in tokens
};

/// Derives the text axis rows from an annotated utterance.
TextAxis build_text_axis(const Utterance& utt);

/// Renders a monotonic attention band that follows token durations and
/// carries a distinct signature per event type:
///   repetition  - the copy rows are re-entered once per copy,
///   block       - a dim, diffuse dwell on the PAUSE row,
///   missing     - a phantom row with a weak trace that never wins a column,
///   replace     - a double band through the substitute token's row,
///   prolongation- a long sharp dwell on the stretched token's row.
AlignmentMatrix render(const Utterance& utt, const RenderConfig& cfg, RandomStream& rng);

/// Softmax across the text dimension per time step, plus the per-column
/// maximum and its row for callers that want the reduced view.
struct Preprocessed {
  AlignmentMatrix matrix;
  Eigen::VectorXd column_max;
  std::vector<int> column_argmax;
};
Preprocessed preprocess(const AlignmentMatrix& a);

/// Tiles the padded time axis into `regions` equal intervals and assigns
/// each region its best-overlapping event: obj flag, the event's global
/// bounds normalized by the padded length, and the class one-hot. Ties go to
/// the earlier event.
std::vector<RegionTarget> events_to_targets(const Utterance& utt, int pad_time,
                                            int regions = 64);

// Texture factors relative to peak_gain.
inline constexpr double kShoulderFactor = 0.35;
inline constexpr double kBlockCenterFactor = 0.5;
inline constexpr double kBlockShoulderFactor = 0.2;
inline constexpr double kReplaceSecondFactor = 0.8;
inline constexpr double kMissingGhostFactor = 0.5;

}  // namespace dysfl::alignsynth
