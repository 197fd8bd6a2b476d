// SPDX-License-Identifier: Apache-2.0
#include "dysfl/alignsynth.hpp"

#include <algorithm>
#include <cmath>

namespace dysfl::alignsynth {

namespace {

std::vector<i64> token_starts(const Utterance& utt) {
  std::vector<i64> starts(utt.tokens.size() + 1, 0);
  for (std::size_t i = 0; i < utt.tokens.size(); ++i) {
    starts[i + 1] = starts[i] + utt.durations_ms[i];
  }
  return starts;
}

// Tokens covered by the event: fully-inside tokens when the bounds line up
// with token boundaries (always true for generated corpora), otherwise any
// overlapping token.
std::pair<std::size_t, std::size_t> covered_range(const std::vector<i64>& starts,
                                                  const DysfluencyEvent& ev) {
  const std::size_t n = starts.size() - 1;
  std::size_t first = n, last = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (starts[i] >= ev.start_ms && starts[i + 1] <= ev.end_ms) {
      if (first == n) first = i;
      last = i + 1;
    }
  }
  if (first != n) return {first, last};
  for (std::size_t i = 0; i < n; ++i) {
    if (starts[i] < ev.end_ms && ev.start_ms < starts[i + 1]) {
      if (first == n) first = i;
      last = i + 1;
    }
  }
  if (first == n) return {0, 0};
  return {first, last};
}

std::size_t smallest_period(const Utterance& utt, std::size_t first, std::size_t last) {
  const std::size_t len = last - first;
  for (std::size_t p = 1; p < len; ++p) {
    if (len % p != 0) continue;
    bool ok = true;
    for (std::size_t i = p; i < len && ok; ++i) {
      ok = utt.tokens[first + i].symbol == utt.tokens[first + i % p].symbol;
    }
    if (ok) return p;
  }
  return len;
}

}  // namespace

void RenderConfig::validate() const {
  if (band_width < 1 || band_width % 2 == 0) {
    throw DataError("render config: band_width must be a positive odd number");
  }
  if (noise_scale < 0) throw DataError("render config: noise_scale must be >= 0");
  if (pad_text < 1 || pad_time < 1) throw DataError("render config: pad sizes must be positive");
  if (peak_gain <= 0) throw DataError("render config: peak_gain must be positive");
}

TextAxis build_text_axis(const Utterance& utt) {
  const std::vector<i64> starts = token_starts(utt);
  const std::size_t n = utt.tokens.size();
  TextAxis axis;
  axis.row_of_token.assign(n, -1);
  axis.copy_of_token.assign(n, 0);
  axis.copy_start_of_token.assign(n, 1);
  axis.event_of_token.assign(n, -1);
  axis.phantom_of_event.assign(utt.events.size(), -1);
  axis.range_first_of_event.assign(utt.events.size(), -1);

  // Phantom rows for removed material go right before this token index.
  std::vector<std::vector<int>> phantoms_at(n + 1);
  axis.period_of_event.assign(utt.events.size(), 1);

  for (std::size_t ei = 0; ei < utt.events.size(); ++ei) {
    const DysfluencyEvent& ev = utt.events[ei];
    if (ev.type == DysfluencyType::Missing) {
      const auto cut = static_cast<std::size_t>(
          std::lower_bound(starts.begin(), starts.end(), ev.start_ms) - starts.begin());
      phantoms_at[std::min(cut, n)].push_back(static_cast<int>(ei));
      continue;
    }
    const auto [first, last] = covered_range(starts, ev);
    if (first == last) continue;
    axis.range_first_of_event[ei] = static_cast<int>(first);
    for (std::size_t t = first; t < last; ++t) axis.event_of_token[t] = static_cast<int>(ei);
    if (ev.type == DysfluencyType::Repetition) {
      const std::size_t p = smallest_period(utt, first, last);
      axis.period_of_event[ei] = static_cast<int>(p);
      for (std::size_t t = first; t < last; ++t) {
        axis.copy_of_token[t] = static_cast<int>((t - first) / p);
        axis.copy_start_of_token[t] = (t - first) % p == 0 ? 1 : 0;
      }
    }
  }

  for (std::size_t t = 0; t <= n; ++t) {
    for (int ei : phantoms_at[t]) {
      axis.phantom_of_event[static_cast<std::size_t>(ei)] =
          static_cast<int>(axis.rows.size());
      axis.rows.push_back({"<removed>", false, true});
    }
    if (t == n) break;
    if (axis.copy_of_token[t] > 0) {
      const int ei = axis.event_of_token[t];
      const auto first = static_cast<std::size_t>(axis.range_first_of_event[ei]);
      const auto p = static_cast<std::size_t>(axis.period_of_event[static_cast<std::size_t>(ei)]);
      axis.row_of_token[t] = axis.row_of_token[first + (t - first) % p];
    } else {
      axis.row_of_token[t] = static_cast<int>(axis.rows.size());
      axis.rows.push_back({utt.tokens[t].symbol, utt.tokens[t].is_pause(), false});
    }
  }
  return axis;
}

AlignmentMatrix render(const Utterance& utt, const RenderConfig& cfg, RandomStream& rng) {
  cfg.validate();
  validate(utt);
  if (utt.tokens.empty()) throw DataError("render: empty utterance");
  const TextAxis axis = build_text_axis(utt);
  const std::vector<i64> starts = token_starts(utt);
  const i64 total_ms = utt.total_duration_ms();
  const int rows_n = static_cast<int>(axis.rows.size());
  const int cols_n = static_cast<int>((total_ms + kMsPerFrame - 1) / kMsPerFrame);
  if (rows_n > cfg.pad_text) {
    throw DataError("render: utterance '" + utt.id + "' needs " + std::to_string(rows_n) +
                    " text rows, pad_text is " + std::to_string(cfg.pad_text));
  }
  if (cols_n > cfg.pad_time) {
    throw DataError("render: utterance '" + utt.id + "' needs " + std::to_string(cols_n) +
                    " columns, pad_time is " + std::to_string(cfg.pad_time));
  }

  AlignmentMatrix out;
  out.values = Eigen::MatrixXd::Zero(cfg.pad_text, cfg.pad_time);
  out.text_len = rows_n;
  out.time_len = cols_n;
  Eigen::MatrixXd& m = out.values;
  const double gain = cfg.peak_gain;

  // Column ownership by column centers.
  std::vector<std::size_t> owner(static_cast<std::size_t>(cols_n));
  for (int c = 0; c < cols_n; ++c) {
    i64 center = static_cast<i64>(c) * kMsPerFrame + kMsPerFrame / 2;
    center = std::min(center, total_ms - 1);
    const auto it = std::upper_bound(starts.begin(), starts.end(), center);
    owner[static_cast<std::size_t>(c)] =
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - starts.begin() - 1));
  }

  auto bump = [&](int row, int col, double v) {
    if (row < 0 || row >= rows_n) return;
    m(row, col) = std::max(m(row, col), v);
  };

  const int half = (cfg.band_width - 1) / 2;
  for (int c = 0; c < cols_n; ++c) {
    const std::size_t tok = owner[static_cast<std::size_t>(c)];
    const int r = axis.row_of_token[tok];
    const int ei = axis.event_of_token[tok];
    const DysfluencyType type =
        ei >= 0 ? utt.events[static_cast<std::size_t>(ei)].type : DysfluencyType::Repetition;
    const bool in_event = ei >= 0;

    if (in_event && type == DysfluencyType::Block) {
      bump(r, c, gain * kBlockCenterFactor);
      bump(r - 1, c, gain * kBlockShoulderFactor);
      bump(r + 1, c, gain * kBlockShoulderFactor);
      continue;
    }
    if (in_event && type == DysfluencyType::Replace) {
      bump(r, c, gain);
      const int second = r + 1 < rows_n ? r + 1 : r - 1;
      bump(second, c, gain * kReplaceSecondFactor);
      continue;
    }
    if (in_event && type == DysfluencyType::Repetition && axis.copy_of_token[tok] > 0 &&
        axis.copy_start_of_token[tok] && (c == 0 || owner[static_cast<std::size_t>(c - 1)] != tok)) {
      // First column of a re-utterance: the band dips off the copy rows so
      // each copy shows up as its own visit.
      const int ei_first = axis.range_first_of_event[ei];
      const int group_first = axis.row_of_token[static_cast<std::size_t>(ei_first)];
      int bounce = group_first - 1;
      if (bounce < 0) bounce = group_first + axis.period_of_event[static_cast<std::size_t>(ei)];
      if (bounce >= 0 && bounce < rows_n) {
        bump(bounce, c, gain);
        continue;
      }
    }
    bump(r, c, gain);
    for (int d = 1; d <= half; ++d) {
      bump(r - d, c, gain * kShoulderFactor / d);
      bump(r + d, c, gain * kShoulderFactor / d);
    }
  }

  // Weak trace on phantom rows across the missing event's window; the band
  // above stays dominant, so these rows never win a column.
  for (std::size_t ei = 0; ei < utt.events.size(); ++ei) {
    const int rm = axis.phantom_of_event[ei];
    if (rm < 0) continue;
    const DysfluencyEvent& ev = utt.events[ei];
    const int c0 = std::max<int>(0, static_cast<int>(ev.start_ms / kMsPerFrame));
    const int c1 = std::min<int>(
        cols_n, static_cast<int>((ev.end_ms + kMsPerFrame - 1) / kMsPerFrame));
    for (int c = c0; c < c1; ++c) bump(rm, c, gain * kMissingGhostFactor);
  }

  if (cfg.noise_scale > 0) {
    for (int r = 0; r < rows_n; ++r) {
      for (int c = 0; c < cols_n; ++c) {
        m(r, c) = std::max(0.0, m(r, c) + cfg.noise_scale * rng.normal());
      }
    }
  }
  return out;
}

Preprocessed preprocess(const AlignmentMatrix& a) {
  if (!a.values.allFinite()) throw NumericError("preprocess: non-finite alignment entries");
  Preprocessed out;
  out.matrix.text_len = a.text_len;
  out.matrix.time_len = a.time_len;
  out.matrix.values.resizeLike(a.values);
  out.column_max.resize(a.values.cols());
  out.column_argmax.assign(static_cast<std::size_t>(a.values.cols()), 0);
  for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
    const auto col = a.values.col(c);
    Eigen::Index arg = 0;
    const double peak = col.maxCoeff(&arg);
    const Eigen::ArrayXd shifted = (col.array() - peak).exp();
    out.matrix.values.col(c) = shifted / shifted.sum();
    out.column_max(c) = out.matrix.values(arg, c);
    out.column_argmax[static_cast<std::size_t>(c)] = static_cast<int>(arg);
  }
  return out;
}

std::vector<RegionTarget> events_to_targets(const Utterance& utt, int pad_time, int regions) {
  if (regions < 1) throw DataError("events_to_targets: regions must be positive");
  if (pad_time % regions != 0) {
    throw DataError("events_to_targets: pad_time must be divisible by region count");
  }
  const i64 pad_ms = static_cast<i64>(pad_time) * kMsPerFrame;
  const i64 region_ms = pad_ms / regions;
  for (const DysfluencyEvent& ev : utt.events) {
    if (ev.start_ms < 0 || ev.end_ms > pad_ms) {
      throw DataError("events_to_targets: event outside padded range in '" + utt.id + "'");
    }
  }
  std::vector<RegionTarget> targets(static_cast<std::size_t>(regions));
  for (int i = 0; i < regions; ++i) {
    const i64 r0 = static_cast<i64>(i) * region_ms;
    const i64 r1 = r0 + region_ms;
    i64 best_overlap = 0;
    const DysfluencyEvent* best = nullptr;
    for (const DysfluencyEvent& ev : utt.events) {
      const i64 overlap = std::min(r1, ev.end_ms) - std::max(r0, ev.start_ms);
      if (overlap > best_overlap) {  // ties keep the earlier (first) event
        best_overlap = overlap;
        best = &ev;
      }
    }
    if (best != nullptr) {
      RegionTarget& t = targets[static_cast<std::size_t>(i)];
      t.obj = 1.0;
      t.b_start = static_cast<double>(best->start_ms) / static_cast<double>(pad_ms);
      t.b_end = static_cast<double>(best->end_ms) / static_cast<double>(pad_ms);
      t.class_onehot[static_cast<std::size_t>(best->type)] = 1.0;
    }
  }
  return targets;
}

}  // namespace dysfl::alignsynth
