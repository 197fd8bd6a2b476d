// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "dysfl/types.hpp"

namespace dysfl {

/// JSON Lines utterance manifest, one record per line:
///   {"id": ..., "language": "english"|"mandarin",
///    "tokens": [{"symbol": ..., "is_vowel": ..., "word_index": ...}, ...],
///    "durations_ms": [...],
///    "events": [{"type": ..., "start_ms": ..., "end_ms": ..., "level": ...}, ...]}
/// Loading validates every record and reports the line number of a rejected
/// one. save followed by load is the identity on valid utterances.
std::vector<Utterance> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<Utterance>& utts, const std::filesystem::path& path);

}  // namespace dysfl
