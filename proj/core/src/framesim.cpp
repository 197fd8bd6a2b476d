// SPDX-License-Identifier: Apache-2.0
#include "dysfl/framesim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dysfl/tensor_io.hpp"
#include "json.hpp"

namespace dysfl::framesim {

namespace {

using Eigen::MatrixXf;

bool intervals_overlap(i64 a0, i64 a1, i64 b0, i64 b1) { return a0 < b1 && b0 < a1; }

bool span_hits_event(const FrameTrack& track, const Span& span) {
  const i64 s = span.start_frame * kMsPerFrame;
  const i64 e = span.end_frame * kMsPerFrame;
  for (const DysfluencyEvent& ev : track.events) {
    if (intervals_overlap(s, e, ev.start_ms, ev.end_ms)) return true;
  }
  return false;
}

struct WordRun {
  std::size_t first = 0;
  std::size_t last = 0;  // exclusive
};

// Words are runs of equal word_index over non-pause spans; a run containing
// any pause span is not an editable word.
std::vector<WordRun> word_runs(const FrameTrack& track) {
  std::vector<WordRun> runs;
  std::size_t i = 0;
  while (i < track.spans.size()) {
    std::size_t j = i + 1;
    while (j < track.spans.size() &&
           track.spans[j].token.word_index == track.spans[i].token.word_index) {
      ++j;
    }
    bool clean = true;
    for (std::size_t k = i; k < j; ++k) {
      if (track.spans[k].token.is_pause()) clean = false;
    }
    if (clean) runs.push_back({i, j});
    i = j;
  }
  return runs;
}

Eigen::RowVectorXf lerp(const Eigen::RowVectorXf& a, const Eigen::RowVectorXf& b, float t) {
  return a + (b - a) * t;
}

/// Replacement content for a splice; spans must tile the frame block.
struct Replacement {
  MatrixXf frames;  // may have zero rows (pure removal)
  std::vector<std::pair<Token, i64>> spans;  // (token, length)
};

/// Replaces spans [span_first, span_last) with `repl`, inserting two
/// interpolated buffer frames before and after the new content (a pure
/// removal gets one four-frame bridge at the cut). Appends one event of
/// `type` covering the content frames only and re-times everything after
/// the edit.
FrameTrack splice(const FrameTrack& track, std::size_t span_first, std::size_t span_last,
                  const Replacement& repl, DysfluencyType type, Level level) {
  const i64 total = track.total_frames();
  const i64 begin = span_first < track.spans.size() ? track.spans[span_first].start_frame
                                                    : total;
  const i64 end = span_last > span_first ? track.spans[span_last - 1].end_frame : begin;
  const i64 repl_rows = repl.frames.rows();
  const i64 new_total = total - (end - begin) + repl_rows + kEditBufferTotal;
  const i64 delta = new_total - total;

  FrameTrack out;
  out.frames.resize(new_total, track.channels());
  i64 row = 0;
  out.frames.topRows(begin) = track.frames.topRows(begin);
  row += begin;

  i64 content_begin = 0;
  if (repl_rows > 0) {
    const Eigen::RowVectorXf pre_left =
        begin > 0 ? track.frames.row(begin - 1) : repl.frames.row(0);
    const Eigen::RowVectorXf pre_right = repl.frames.row(0);
    for (int b = 1; b <= kBufferFrames; ++b) {
      out.frames.row(row++) = lerp(pre_left, pre_right, static_cast<float>(b) / 3.0f);
    }
    content_begin = row;
    out.frames.middleRows(row, repl_rows) = repl.frames;
    row += repl_rows;
    const Eigen::RowVectorXf post_left = repl.frames.row(repl_rows - 1);
    const Eigen::RowVectorXf post_right =
        end < total ? track.frames.row(end) : repl.frames.row(repl_rows - 1);
    for (int b = 1; b <= kBufferFrames; ++b) {
      out.frames.row(row++) = lerp(post_left, post_right, static_cast<float>(b) / 3.0f);
    }
  } else {
    // Bridge the cut with four interpolants between the flanking frames.
    const Eigen::RowVectorXf left =
        begin > 0 ? track.frames.row(begin - 1) : track.frames.row(end);
    const Eigen::RowVectorXf right =
        end < total ? track.frames.row(end) : track.frames.row(begin - 1);
    content_begin = row;
    for (int b = 1; b <= kEditBufferTotal; ++b) {
      out.frames.row(row++) = lerp(left, right, static_cast<float>(b) / 5.0f);
    }
  }
  out.frames.bottomRows(total - end) = track.frames.bottomRows(total - end);

  // Rebuild spans. The edited spans absorb their own buffer ramps, so every
  // downstream span start shifts by exactly `delta`; events cover content
  // frames only.
  const bool has_prev = span_first > 0;
  const bool has_next = span_last < track.spans.size();
  for (std::size_t i = 0; i < span_first; ++i) out.spans.push_back(track.spans[i]);
  if (repl_rows > 0) {
    i64 cursor = content_begin;
    for (const auto& [token, length] : repl.spans) {
      out.spans.push_back({token, cursor, cursor + length});
      cursor += length;
    }
    out.spans[span_first].start_frame -= kBufferFrames;
    out.spans.back().end_frame += kBufferFrames;
  }
  for (std::size_t i = span_last; i < track.spans.size(); ++i) {
    Span s = track.spans[i];
    s.start_frame += delta;
    s.end_frame += delta;
    out.spans.push_back(s);
  }
  if (repl_rows == 0) {
    // Pure removal: split the four bridge frames between the flanking spans.
    if (has_prev && has_next) {
      out.spans[span_first - 1].end_frame += kBufferFrames;
      out.spans[span_first].start_frame -= kBufferFrames;
    } else if (has_prev) {
      out.spans[span_first - 1].end_frame += kEditBufferTotal;
    } else {
      out.spans[span_first].start_frame -= kEditBufferTotal;
    }
  }

  // Re-time events and append the new annotation.
  const i64 edit_from_ms = end * kMsPerFrame;
  for (const DysfluencyEvent& ev : track.events) {
    DysfluencyEvent moved = ev;
    if (moved.start_ms >= edit_from_ms) {
      moved.start_ms += delta * kMsPerFrame;
      moved.end_ms += delta * kMsPerFrame;
    }
    out.events.push_back(moved);
  }
  DysfluencyEvent ev;
  ev.type = type;
  ev.level = level;
  if (repl_rows > 0) {
    ev.start_ms = content_begin * kMsPerFrame;
    ev.end_ms = (content_begin + repl_rows) * kMsPerFrame;
  } else {
    ev.start_ms = begin * kMsPerFrame;
    ev.end_ms = (begin + kEditBufferTotal) * kMsPerFrame;
  }
  out.events.push_back(ev);
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const DysfluencyEvent& a, const DysfluencyEvent& b) {
                     return a.start_ms != b.start_ms ? a.start_ms < b.start_ms
                                                     : a.end_ms < b.end_ms;
                   });
  return out;
}

std::vector<std::size_t> span_candidates(const FrameTrack& track, bool vowels_only) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < track.spans.size(); ++i) {
    const Span& s = track.spans[i];
    if (s.token.is_pause()) continue;
    if (vowels_only && !s.token.is_vowel) continue;
    if (span_hits_event(track, s)) continue;
    out.push_back(i);
  }
  return out;
}

MatrixXf span_frames(const FrameTrack& track, const Span& s) {
  return track.frames.middleRows(s.start_frame, s.length());
}

}  // namespace

void validate(const FrameTrack& track) {
  if (track.channels() < 1) throw DataError("frame track: no channels");
  if (track.spans.empty()) throw DataError("frame track: no spans");
  i64 cursor = 0;
  for (std::size_t i = 0; i < track.spans.size(); ++i) {
    const Span& s = track.spans[i];
    if (s.start_frame != cursor) {
      throw DataError("frame track: span " + std::to_string(i) + " starts at " +
                      std::to_string(s.start_frame) + ", expected " + std::to_string(cursor));
    }
    if (s.end_frame <= s.start_frame) {
      throw DataError("frame track: span " + std::to_string(i) + " is empty");
    }
    cursor = s.end_frame;
  }
  if (cursor != track.total_frames()) {
    throw DataError("frame track: spans cover " + std::to_string(cursor) + " of " +
                    std::to_string(track.total_frames()) + " frames");
  }
  i64 prev_start = -1;
  for (const DysfluencyEvent& ev : track.events) {
    if (ev.start_ms < 0 || ev.start_ms >= ev.end_ms ||
        ev.end_ms > track.total_frames() * kMsPerFrame) {
      throw DataError("frame track: event bounds outside track");
    }
    if (ev.start_ms < prev_start) throw DataError("frame track: events not sorted");
    prev_start = ev.start_ms;
  }
}

FrameTrack edit_repetition(const FrameTrack& track, RandomStream& rng) {
  const std::vector<WordRun> words = word_runs(track);
  std::vector<std::size_t> heads;
  for (const WordRun& w : words) {
    if (!span_hits_event(track, track.spans[w.first])) heads.push_back(w.first);
  }
  if (heads.empty()) throw DataError("edit_repetition: no word boundary metadata");
  const std::size_t target = heads[rng.index(heads.size())];
  const int k = static_cast<int>(rng.uniform_int(kRepeatMin, kRepeatMax));
  const Span& span = track.spans[target];
  Replacement repl;
  repl.frames.resize(span.length() * k, track.channels());
  for (int c = 0; c < k; ++c) {
    repl.frames.middleRows(span.length() * c, span.length()) = span_frames(track, span);
    repl.spans.emplace_back(span.token, span.length());
  }
  return splice(track, target, target + 1, repl, DysfluencyType::Repetition, Level::Phoneme);
}

FrameTrack edit_word_repetition(const FrameTrack& track, RandomStream& rng) {
  std::vector<WordRun> words;
  for (const WordRun& w : word_runs(track)) {
    bool clean = true;
    for (std::size_t i = w.first; i < w.last; ++i) {
      if (span_hits_event(track, track.spans[i])) clean = false;
    }
    if (clean) words.push_back(w);
  }
  if (words.empty()) throw DataError("edit_word_repetition: no word boundary metadata");
  const WordRun w = words[rng.index(words.size())];
  const int k = static_cast<int>(rng.uniform_int(kRepeatMin, kRepeatMax));
  const i64 w_begin = track.spans[w.first].start_frame;
  const i64 w_len = track.spans[w.last - 1].end_frame - w_begin;
  Replacement repl;
  repl.frames.resize(w_len * k, track.channels());
  for (int c = 0; c < k; ++c) {
    repl.frames.middleRows(w_len * c, w_len) = track.frames.middleRows(w_begin, w_len);
    for (std::size_t i = w.first; i < w.last; ++i) {
      repl.spans.emplace_back(track.spans[i].token, track.spans[i].length());
    }
  }
  return splice(track, w.first, w.last, repl, DysfluencyType::Repetition, Level::Word);
}

FrameTrack edit_block(const FrameTrack& track, RandomStream& rng) {
  if (track.total_frames() < kBlockFramesMax) {
    throw DataError("edit_block: track shorter than " + std::to_string(kBlockFramesMax) +
                    " frames");
  }
  const std::vector<std::size_t> cands = span_candidates(track, false);
  if (cands.empty()) throw DataError("edit_block: no target available");
  const std::size_t target = cands[rng.index(cands.size())];
  const i64 silence = rng.uniform_int(kBlockFramesMin, kBlockFramesMax);
  Replacement repl;
  repl.frames = track.frames.topRows(silence);  // silence sampled from the beginning
  Token pause;
  pause.symbol = std::string(kPauseSymbol);
  pause.word_index = track.spans[target].token.word_index;
  repl.spans.emplace_back(pause, silence);
  return splice(track, target + 1, target + 1, repl, DysfluencyType::Block, Level::Phoneme);
}

FrameTrack edit_missing(const FrameTrack& track, RandomStream& rng, Level level) {
  std::size_t first = 0, last = 0;
  if (level == Level::Word) {
    std::vector<WordRun> words;
    for (const WordRun& w : word_runs(track)) {
      bool clean = true;
      for (std::size_t i = w.first; i < w.last; ++i) {
        if (span_hits_event(track, track.spans[i])) clean = false;
      }
      if (clean) words.push_back(w);
    }
    if (words.empty()) throw DataError("edit_missing: no word boundary metadata");
    const WordRun w = words[rng.index(words.size())];
    first = w.first;
    last = w.last;
  } else {
    const std::vector<std::size_t> cands = span_candidates(track, false);
    if (cands.empty()) throw DataError("edit_missing: no target available");
    first = cands[rng.index(cands.size())];
    last = first + 1;
  }
  if (last - first >= track.spans.size()) {
    throw DataError("edit_missing: removal would leave no spans");
  }
  Replacement repl;  // empty: pure removal
  repl.frames.resize(0, track.channels());
  return splice(track, first, last, repl, DysfluencyType::Missing,
                level == Level::Word ? Level::Word : Level::Phoneme);
}

FrameTrack edit_replace(const FrameTrack& track, RandomStream& rng) {
  const std::vector<std::size_t> targets = span_candidates(track, false);
  if (targets.empty()) throw DataError("edit_replace: no target available");
  const std::size_t target = targets[rng.index(targets.size())];
  std::vector<std::size_t> donors;
  for (std::size_t i = 0; i < track.spans.size(); ++i) {
    if (i == target) continue;
    if (track.spans[i].token.is_pause()) continue;
    if (track.spans[i].token.symbol == track.spans[target].token.symbol) continue;
    donors.push_back(i);
  }
  if (donors.empty()) throw DataError("edit_replace: no donor available");
  const Span& donor = track.spans[donors[rng.index(donors.size())]];
  const Span& tspan = track.spans[target];
  const i64 len = tspan.length();
  const MatrixXf src = span_frames(track, donor);
  Replacement repl;
  repl.frames.resize(len, track.channels());
  // Linear time-resampling of the donor onto the target's length.
  for (i64 j = 0; j < len; ++j) {
    if (src.rows() == 1 || len == 1) {
      repl.frames.row(j) = src.row(0);
      continue;
    }
    const double t = static_cast<double>(j) * (src.rows() - 1) / static_cast<double>(len - 1);
    const i64 lo = static_cast<i64>(std::floor(t));
    const i64 hi = std::min<i64>(lo + 1, src.rows() - 1);
    repl.frames.row(j) = lerp(src.row(lo), src.row(hi), static_cast<float>(t - lo));
  }
  repl.spans.emplace_back(donor.token, len);
  return splice(track, target, target + 1, repl, DysfluencyType::Replace, Level::Phoneme);
}

FrameTrack edit_prolongation(const FrameTrack& track, RandomStream& rng) {
  const std::vector<std::size_t> cands = span_candidates(track, true);
  if (cands.empty()) throw DataError("edit_prolongation: no vowel present");
  const std::size_t target = cands[rng.index(cands.size())];
  const int f = static_cast<int>(rng.uniform_int(kProlongMin, kProlongMax));
  const Span& span = track.spans[target];
  const i64 len = span.length();
  const MatrixXf src = span_frames(track, span);
  Replacement repl;
  repl.frames.resize(len * f, track.channels());
  // Each inter-frame gap is subdivided into f steps, so the value at every
  // stretched position i*f equals the original frame i; the final frame is
  // held for its f slots.
  for (i64 i = 0; i < len; ++i) {
    for (int m = 0; m < f; ++m) {
      if (i + 1 < len) {
        repl.frames.row(i * f + m) =
            lerp(src.row(i), src.row(i + 1), static_cast<float>(m) / static_cast<float>(f));
      } else {
        repl.frames.row(i * f + m) = src.row(i);
      }
    }
  }
  repl.spans.emplace_back(span.token, len * f);
  return splice(track, target, target + 1, repl, DysfluencyType::Prolongation, Level::Phoneme);
}

FrameTrack edit(const FrameTrack& track, DysfluencyType type, Level level, RandomStream& rng) {
  switch (type) {
    case DysfluencyType::Repetition:
      return level == Level::Word ? edit_word_repetition(track, rng)
                                  : edit_repetition(track, rng);
    case DysfluencyType::Missing:
      return edit_missing(track, rng, level);
    case DysfluencyType::Block:
      return edit_block(track, rng);
    case DysfluencyType::Replace:
      return edit_replace(track, rng);
    case DysfluencyType::Prolongation:
      return edit_prolongation(track, rng);
  }
  throw DataError("edit: unknown dysfluency type");
}

FrameTrack synth_track(const TokenInventory& inv, const SynthParams& params, RandomStream& rng) {
  inv.validate();
  FrameTrack track;
  Token pause;
  pause.symbol = std::string(kPauseSymbol);
  pause.word_index = 0;
  i64 cursor = 0;
  const i64 lead = rng.uniform_int(params.min_lead_silence, params.max_lead_silence);
  track.spans.push_back({pause, cursor, cursor + lead});
  cursor += lead;

  const int n_words = static_cast<int>(rng.uniform_int(params.min_words, params.max_words));
  for (int w = 0; w < n_words; ++w) {
    const int len =
        static_cast<int>(rng.uniform_int(params.min_word_tokens, params.max_word_tokens));
    const std::size_t vowel_slot = rng.index(static_cast<std::size_t>(len));
    for (int j = 0; j < len; ++j) {
      const std::string& symbol = static_cast<std::size_t>(j) == vowel_slot
                                      ? rng.pick(inv.vowels)
                                      : rng.pick(inv.symbols);
      const i64 frames = rng.uniform_int(params.min_token_frames, params.max_token_frames);
      track.spans.push_back({inv.make_token(symbol, static_cast<u32>(w + 1)), cursor,
                             cursor + frames});
      cursor += frames;
    }
  }

  // Smooth per-channel splines: random control points every few frames with
  // cosine interpolation, scaled down to near-silence in pause spans.
  const i64 total = cursor;
  track.frames.resize(total, params.channels);
  const i64 knot_spacing = 8;
  const i64 n_knots = total / knot_spacing + 2;
  for (int d = 0; d < params.channels; ++d) {
    std::vector<double> knots(static_cast<std::size_t>(n_knots));
    for (auto& k : knots) k = rng.normal();
    for (i64 t = 0; t < total; ++t) {
      const i64 seg = t / knot_spacing;
      const double frac = static_cast<double>(t % knot_spacing) / knot_spacing;
      const double blend = 0.5 - 0.5 * std::cos(M_PI * frac);
      const double v = knots[static_cast<std::size_t>(seg)] * (1.0 - blend) +
                       knots[static_cast<std::size_t>(seg + 1)] * blend;
      track.frames(t, d) = static_cast<float>(v);
    }
  }
  for (const Span& s : track.spans) {
    if (s.token.is_pause()) {
      track.frames.middleRows(s.start_frame, s.length()) *= 0.05f;
    }
  }
  return track;
}

void save_track(const FrameTrack& track, const std::filesystem::path& dir,
                const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_matrix(track.frames, dir / (stem + ".stsf"));
  std::ofstream os(dir / (stem + ".meta.jsonl"), std::ios::trunc);
  if (!os) throw DataError("cannot write track sidecar for " + stem);
  using nlohmann::json;
  for (const Span& s : track.spans) {
    os << json{{"kind", "span"},
               {"symbol", s.token.symbol},
               {"is_vowel", s.token.is_vowel},
               {"word_index", s.token.word_index},
               {"start_frame", s.start_frame},
               {"end_frame", s.end_frame}}
              .dump()
       << '\n';
  }
  for (const DysfluencyEvent& ev : track.events) {
    os << json{{"kind", "event"},
               {"type", to_string(ev.type)},
               {"start_ms", ev.start_ms},
               {"end_ms", ev.end_ms},
               {"level", to_string(ev.level)}}
              .dump()
       << '\n';
  }
}

FrameTrack load_track(const std::filesystem::path& dir, const std::string& stem) {
  FrameTrack track;
  track.frames = read_matrix(dir / (stem + ".stsf"));
  const auto sidecar = dir / (stem + ".meta.jsonl");
  std::ifstream is(sidecar);
  if (!is) throw DataError("cannot open track sidecar: " + sidecar.string());
  using nlohmann::json;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "span") {
        Span s;
        s.token.symbol = j.at("symbol").get<std::string>();
        s.token.is_vowel = j.at("is_vowel").get<bool>();
        s.token.word_index = j.at("word_index").get<u32>();
        s.start_frame = j.at("start_frame").get<i64>();
        s.end_frame = j.at("end_frame").get<i64>();
        track.spans.push_back(std::move(s));
      } else if (kind == "event") {
        DysfluencyEvent ev;
        ev.type = dysfluency_type_from_string(j.at("type").get<std::string>());
        ev.start_ms = j.at("start_ms").get<i64>();
        ev.end_ms = j.at("end_ms").get<i64>();
        ev.level = level_from_string(j.at("level").get<std::string>());
        track.events.push_back(ev);
      } else {
        throw DataError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw DataError(sidecar.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(track);
  return track;
}

}  // namespace dysfl::framesim
