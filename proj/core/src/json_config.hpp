// SPDX-License-Identifier: Apache-2.0
// Internal JSON (de)serialization helpers shared by checkpoint and
// experiment-config code. Not installed.
#pragma once

#include "dysfl/alignsynth.hpp"
#include "dysfl/loss.hpp"
#include "dysfl/model.hpp"
#include "dysfl/textsim.hpp"
#include "dysfl/train.hpp"
#include "json.hpp"

namespace dysfl::detail {

using nlohmann::json;

json to_json(const detector::ModelConfig& cfg);
detector::ModelConfig model_config_from_json(const json& j);

json to_json(const detector::LossConfig& cfg);
detector::LossConfig loss_config_from_json(const json& j);

json to_json(const detector::TrainConfig& cfg);
detector::TrainConfig train_config_from_json(const json& j);

json to_json(const alignsynth::RenderConfig& cfg);
alignsynth::RenderConfig render_config_from_json(const json& j);

json to_json(const textsim::MixConfig& cfg);
textsim::MixConfig mix_config_from_json(const json& j);

/// Reads a field when present, keeping the default otherwise.
template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace dysfl::detail
