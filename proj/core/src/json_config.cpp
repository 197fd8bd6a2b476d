// SPDX-License-Identifier: Apache-2.0
#include "json_config.hpp"

namespace dysfl::detail {

json to_json(const detector::ModelConfig& cfg) {
  json blocks = json::array();
  for (const auto& b : cfg.spatial) {
    blocks.push_back(json{{"in_channels", b.in_channels},
                          {"out_channels", b.out_channels},
                          {"kernel", b.kernel},
                          {"groups", b.groups},
                          {"stride", b.stride}});
  }
  return json{{"pad_text", cfg.pad_text},
              {"pad_time", cfg.pad_time},
              {"use_max_channel", cfg.use_max_channel},
              {"spatial", std::move(blocks)},
              {"layers", cfg.layers},
              {"heads", cfg.heads},
              {"width", cfg.width},
              {"ffn_dim", cfg.ffn_dim}};
}

detector::ModelConfig model_config_from_json(const json& j) {
  detector::ModelConfig cfg = detector::ModelConfig::desk_default();
  maybe(j, "pad_text", cfg.pad_text);
  maybe(j, "pad_time", cfg.pad_time);
  maybe(j, "use_max_channel", cfg.use_max_channel);
  maybe(j, "layers", cfg.layers);
  maybe(j, "heads", cfg.heads);
  maybe(j, "width", cfg.width);
  maybe(j, "ffn_dim", cfg.ffn_dim);
  if (j.contains("spatial")) {
    cfg.spatial.clear();
    for (const json& bj : j.at("spatial")) {
      detector::SpatialBlockConfig b;
      maybe(bj, "in_channels", b.in_channels);
      maybe(bj, "out_channels", b.out_channels);
      maybe(bj, "kernel", b.kernel);
      maybe(bj, "groups", b.groups);
      maybe(bj, "stride", b.stride);
      cfg.spatial.push_back(b);
    }
  }
  cfg.validate();
  return cfg;
}

json to_json(const detector::LossConfig& cfg) {
  return json{{"lambda_bound", cfg.lambda_bound},
              {"lambda_conf", cfg.lambda_conf},
              {"lambda_class", cfg.lambda_class},
              {"eps", cfg.eps},
              {"class_masked_by_obj", cfg.class_masked_by_obj}};
}

detector::LossConfig loss_config_from_json(const json& j) {
  detector::LossConfig cfg;
  maybe(j, "lambda_bound", cfg.lambda_bound);
  maybe(j, "lambda_conf", cfg.lambda_conf);
  maybe(j, "lambda_class", cfg.lambda_class);
  maybe(j, "eps", cfg.eps);
  maybe(j, "class_masked_by_obj", cfg.class_masked_by_obj);
  cfg.validate();
  return cfg;
}

json to_json(const detector::TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"lr", cfg.lr},
              {"beta1", cfg.beta1},   {"beta2", cfg.beta2},           {"adam_eps", cfg.adam_eps}};
}

detector::TrainConfig train_config_from_json(const json& j) {
  detector::TrainConfig cfg;
  maybe(j, "epochs", cfg.epochs);
  maybe(j, "batch_size", cfg.batch_size);
  maybe(j, "lr", cfg.lr);
  maybe(j, "beta1", cfg.beta1);
  maybe(j, "beta2", cfg.beta2);
  maybe(j, "adam_eps", cfg.adam_eps);
  cfg.validate();
  return cfg;
}

json to_json(const alignsynth::RenderConfig& cfg) {
  return json{{"band_width", cfg.band_width},
              {"noise_scale", cfg.noise_scale},
              {"pad_text", cfg.pad_text},
              {"pad_time", cfg.pad_time},
              {"peak_gain", cfg.peak_gain}};
}

alignsynth::RenderConfig render_config_from_json(const json& j) {
  alignsynth::RenderConfig cfg;
  maybe(j, "band_width", cfg.band_width);
  maybe(j, "noise_scale", cfg.noise_scale);
  maybe(j, "pad_text", cfg.pad_text);
  maybe(j, "pad_time", cfg.pad_time);
  maybe(j, "peak_gain", cfg.peak_gain);
  cfg.validate();
  return cfg;
}

json to_json(const textsim::MixConfig& cfg) {
  json weights = json::object();
  for (int t = 0; t < kNumDysfluencyTypes; ++t) {
    weights[std::string(to_string(static_cast<DysfluencyType>(t)))] =
        cfg.type_weights[static_cast<std::size_t>(t)];
  }
  return json{{"type_weights", std::move(weights)},
              {"co_single_prob", cfg.co_single_prob},
              {"co_multi_prob", cfg.co_multi_prob}};
}

textsim::MixConfig mix_config_from_json(const json& j) {
  textsim::MixConfig cfg;
  if (j.contains("type_weights")) {
    cfg.type_weights.fill(0.0);
    for (const auto& [key, value] : j.at("type_weights").items()) {
      const DysfluencyType t = dysfluency_type_from_string(key);
      cfg.type_weights[static_cast<std::size_t>(static_cast<int>(t))] = value.get<double>();
    }
  }
  maybe(j, "co_single_prob", cfg.co_single_prob);
  maybe(j, "co_multi_prob", cfg.co_multi_prob);
  cfg.validate();
  return cfg;
}

}  // namespace dysfl::detail
