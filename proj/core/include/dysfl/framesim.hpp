// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "dysfl/inventory.hpp"
#include "dysfl/rng.hpp"
#include "dysfl/types.hpp"

namespace dysfl::framesim {

// 50 Hz frame clock; every edit splices content and adds a total of four
// interpolated buffer frames (two before and two after the modification;
// a pure removal gets one four-frame bridge at the cut).
inline constexpr int kBufferFrames = 2;
inline constexpr int kEditBufferTotal = 2 * kBufferFrames;
inline constexpr int kRepeatMin = 2, kRepeatMax = 4;
inline constexpr int kBlockFramesMin = 10, kBlockFramesMax = 15;
inline constexpr int kProlongMin = 4, kProlongMax = 6;
inline constexpr int kTargetRetries = 16;

/// Phoneme span over the frame axis; spans tile [0, T).
struct Span {
  Token token;
  i64 start_frame = 0;
  i64 end_frame = 0;  // exclusive

  i64 length() const { return end_frame - start_frame; }
};

/// A feature-frame sequence (T x D) with phoneme span labels and event
/// annotations. Event bounds are milliseconds (frame index x 20 ms).
struct FrameTrack {
  Eigen::MatrixXf frames;  // T rows, D channels
  std::vector<Span> spans;
  std::vector<DysfluencyEvent> events;

  i64 total_frames() const { return frames.rows(); }
  int channels() const { return static_cast<int>(frames.cols()); }
};

/// Throws DataError if spans do not tile [0, T) in order or events are bad.
void validate(const FrameTrack& track);

// Each edit is pure: a new track is returned, the input stays intact.
// Frame-count changes are exact: content delta plus kEditBufferTotal.
FrameTrack edit_repetition(const FrameTrack& track, RandomStream& rng);
FrameTrack edit_word_repetition(const FrameTrack& track, RandomStream& rng);
FrameTrack edit_block(const FrameTrack& track, RandomStream& rng);
FrameTrack edit_missing(const FrameTrack& track, RandomStream& rng, Level level);
FrameTrack edit_replace(const FrameTrack& track, RandomStream& rng);
FrameTrack edit_prolongation(const FrameTrack& track, RandomStream& rng);

/// Applies the edit matching `type` (word-level variants via `level`).
FrameTrack edit(const FrameTrack& track, DysfluencyType type, Level level, RandomStream& rng);

/// Synthetic track generator: smooth per-channel splines with a quiet
/// leading pause span, so block edits have silence to sample.
struct SynthParams {
  int channels = 12;
  int min_words = 2, max_words = 3;
  int min_word_tokens = 2, max_word_tokens = 4;
  i64 min_token_frames = 5, max_token_frames = 15;
  i64 min_lead_silence = 15, max_lead_silence = 20;
};

FrameTrack synth_track(const TokenInventory& inv, const SynthParams& params, RandomStream& rng);

/// Track storage: `<stem>.stsf` frames plus a `<stem>.meta.jsonl` sidecar
/// holding one span or event record per line.
void save_track(const FrameTrack& track, const std::filesystem::path& dir,
                const std::string& stem);
FrameTrack load_track(const std::filesystem::path& dir, const std::string& stem);

}  // namespace dysfl::framesim
