// SPDX-License-Identifier: Apache-2.0
#include "dysfl/model.hpp"

#include <cmath>

namespace dysfl::detector {

void ModelConfig::validate() const {
  if (pad_text < 1 || pad_time < 1) throw DataError("model config: bad pad sizes");
  if (spatial.empty()) throw DataError("model config: no spatial blocks");
  int time = pad_time;
  int channels = input_channels();
  for (std::size_t i = 0; i < spatial.size(); ++i) {
    const SpatialBlockConfig& b = spatial[i];
    const std::string tag = "model config: spatial block " + std::to_string(i);
    if (b.in_channels != channels) {
      throw DataError(tag + " expects " + std::to_string(b.in_channels) + " channels, gets " +
                      std::to_string(channels));
    }
    if (b.groups < 2) throw DataError(tag + ": group count must be > 1");
    if (b.in_channels % b.groups != 0 || b.out_channels % b.groups != 0) {
      throw DataError(tag + ": groups must divide channel counts");
    }
    if (b.kernel < 1 || b.kernel % 2 == 0) throw DataError(tag + ": kernel must be odd");
    if (b.stride < 1) throw DataError(tag + ": bad stride");
    if (time % b.stride != 0) throw DataError(tag + ": stride does not divide time axis");
    time /= b.stride;
    channels = b.out_channels;
  }
  if (time != kNumRegions) {
    throw DataError("model config: spatial strides produce " + std::to_string(time) +
                    " steps, need " + std::to_string(kNumRegions));
  }
  if (channels != width) {
    throw DataError("model config: spatial output channels must equal encoder width");
  }
  if (layers < 0 || heads < 1 || width < 1 || ffn_dim < 1) {
    throw DataError("model config: bad temporal encoder sizes");
  }
  if (width % heads != 0) throw DataError("model config: heads must divide width");
}

ModelConfig ModelConfig::desk_default() {
  ModelConfig cfg;
  cfg.spatial = {
      {65, 60, 3, 5, 2},
      {60, 64, 3, 4, 2},
  };
  return cfg;
}

int DetectionGrid::argmax_class(int i) const {
  int best = 0;
  for (int j = 1; j < kNumDysfluencyTypes; ++j) {
    if (class_score(i, j) > class_score(i, best)) best = j;
  }
  return best;
}

void validate(const DetectionGrid& grid) {
  if (grid.values.cols() != kGridCols) throw DataError("detection grid: wrong column count");
  for (int i = 0; i < grid.regions(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = grid.values(i, c);
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("detection grid: bound/conf outside [0,1]");
    }
    double total = 0;
    for (int j = 0; j < kNumDysfluencyTypes; ++j) total += grid.class_score(i, j);
    if (std::abs(total - 1.0) > 1e-9) {
      throw DataError("detection grid: class scores do not sum to 1");
    }
  }
}

ad::Mat& ParamStore::add(const std::string& name, ad::Mat init) {
  if (index_.count(name)) throw DataError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  NamedParam p;
  p.name = name;
  p.adam_m = ad::Mat::Zero(init.rows(), init.cols());
  p.adam_v = ad::Mat::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.back().value;
}

const ad::Mat& ParamStore::value(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter: " + name);
  return params_[it->second].value;
}

ad::Mat& ParamStore::value(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown parameter: " + name);
  return params_[it->second].value;
}

i64 ParamStore::scalar_count() const {
  i64 n = 0;
  for (const NamedParam& p : params_) n += p.value.size();
  return n;
}

namespace {

ad::Mat xavier(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
               RandomStream& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  ad::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-a, a);
  return m;
}

ad::Mat sinusoidal_table(int steps, int width) {
  ad::Mat pe(steps, width);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < width; ++i) {
      const double rate = std::pow(10000.0, -2.0 * (i / 2) / static_cast<double>(width));
      pe(t, i) = (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
    }
  }
  return pe;
}

}  // namespace

DetectorModel::DetectorModel(ModelConfig cfg, u64 init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  RandomStream rng(init_seed);
  auto add = [&](const std::string& name, ad::Mat m) {
    slot_[name] = params_.size();
    params_.add(name, std::move(m));
  };

  for (std::size_t i = 0; i < cfg_.spatial.size(); ++i) {
    const SpatialBlockConfig& b = cfg_.spatial[i];
    const std::string prefix = "spatial." + std::to_string(i) + ".";
    add(prefix + "dw_w", xavier(b.in_channels, b.kernel, b.kernel, b.kernel, rng));
    add(prefix + "dw_b", ad::Mat::Zero(b.in_channels, 1));
    const int cig = b.in_channels / b.groups;
    add(prefix + "gc_w", xavier(b.out_channels, cig, cig, b.out_channels / b.groups, rng));
    add(prefix + "gc_b", ad::Mat::Zero(b.out_channels, 1));
  }
  const int w = cfg_.width;
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string prefix = "temporal." + std::to_string(l) + ".";
    add(prefix + "ln1_g", ad::Mat::Ones(1, w));
    add(prefix + "ln1_b", ad::Mat::Zero(1, w));
    for (const char* name : {"wq", "wk", "wv", "wo"}) {
      add(prefix + name, xavier(w, w, w, w, rng));
    }
    for (const char* name : {"bq", "bk", "bv", "bo"}) {
      add(prefix + name, ad::Mat::Zero(1, w));
    }
    add(prefix + "ln2_g", ad::Mat::Ones(1, w));
    add(prefix + "ln2_b", ad::Mat::Zero(1, w));
    add(prefix + "ffn_w1", xavier(w, cfg_.ffn_dim, w, cfg_.ffn_dim, rng));
    add(prefix + "ffn_b1", ad::Mat::Zero(1, cfg_.ffn_dim));
    add(prefix + "ffn_w2", xavier(cfg_.ffn_dim, w, cfg_.ffn_dim, w, rng));
    add(prefix + "ffn_b2", ad::Mat::Zero(1, w));
  }
  add("head.w", xavier(w, kGridCols, w, kGridCols, rng));
  add("head.b", ad::Mat::Zero(1, kGridCols));

  positional_ = sinusoidal_table(kNumRegions, w);
}

DetectorModel::Bound DetectorModel::bind(ad::Tape& tape, bool trainable) const {
  Bound bound;
  bound.values.reserve(params_.size());
  for (const NamedParam& p : params_.all()) {
    bound.values.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  }
  return bound;
}

const ad::Value& DetectorModel::p(const Bound& bound, const std::string& name) const {
  const auto it = slot_.find(name);
  if (it == slot_.end()) throw DataError("unknown parameter: " + name);
  return bound.values[it->second];
}

ad::Value DetectorModel::spatial(ad::Tape& tape, const Bound& bound, ad::Value input) const {
  if (input.rows() != cfg_.input_channels() || input.cols() != cfg_.pad_time) {
    throw DataError("spatial: input must be " + std::to_string(cfg_.input_channels()) + "x" +
                    std::to_string(cfg_.pad_time));
  }
  ad::Value x = input;
  for (std::size_t i = 0; i < cfg_.spatial.size(); ++i) {
    const SpatialBlockConfig& b = cfg_.spatial[i];
    const std::string prefix = "spatial." + std::to_string(i) + ".";
    x = tape.conv1d_depthwise(x, p(bound, prefix + "dw_w"), p(bound, prefix + "dw_b"),
                              b.stride, b.kernel / 2);
    x = tape.relu(x);
    x = tape.conv1d_grouped(x, p(bound, prefix + "gc_w"), p(bound, prefix + "gc_b"),
                            b.groups, 1, 0);
    x = tape.relu(x);
  }
  return tape.transpose(x);  // (width x 64) -> (64 x width)
}

ad::Value DetectorModel::temporal(ad::Tape& tape, const Bound& bound, ad::Value feats,
                                  std::vector<ad::Mat>* attention) const {
  if (feats.cols() != cfg_.width || feats.rows() != kNumRegions) {
    throw DataError("temporal: features must be " + std::to_string(kNumRegions) + "x" +
                    std::to_string(cfg_.width));
  }
  if (cfg_.layers == 0) return feats;
  ad::Value x = tape.add(feats, tape.constant(positional_));
  const int head_dim = cfg_.width / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string prefix = "temporal." + std::to_string(l) + ".";
    ad::Value h = tape.layer_norm_rows(x, p(bound, prefix + "ln1_g"), p(bound, prefix + "ln1_b"));
    ad::Value q = tape.add_row_broadcast(tape.matmul(h, p(bound, prefix + "wq")),
                                         p(bound, prefix + "bq"));
    ad::Value k = tape.add_row_broadcast(tape.matmul(h, p(bound, prefix + "wk")),
                                         p(bound, prefix + "bk"));
    ad::Value v = tape.add_row_broadcast(tape.matmul(h, p(bound, prefix + "wv")),
                                         p(bound, prefix + "bv"));
    std::vector<ad::Value> heads;
    heads.reserve(static_cast<std::size_t>(cfg_.heads));
    for (int hd = 0; hd < cfg_.heads; ++hd) {
      ad::Value qh = tape.slice_cols(q, hd * head_dim, head_dim);
      ad::Value kh = tape.slice_cols(k, hd * head_dim, head_dim);
      ad::Value vh = tape.slice_cols(v, hd * head_dim, head_dim);
      ad::Value scores = tape.mul_scalar(tape.matmul_nt(qh, kh), scale);
      ad::Value probs = tape.softmax_rows(scores);
      if (attention != nullptr) attention->push_back(probs.val());
      heads.push_back(tape.matmul(probs, vh));
    }
    ad::Value attn_out = tape.add_row_broadcast(
        tape.matmul(tape.concat_cols(heads), p(bound, prefix + "wo")), p(bound, prefix + "bo"));
    x = tape.add(x, attn_out);
    ad::Value h2 =
        tape.layer_norm_rows(x, p(bound, prefix + "ln2_g"), p(bound, prefix + "ln2_b"));
    ad::Value f = tape.add_row_broadcast(tape.matmul(h2, p(bound, prefix + "ffn_w1")),
                                         p(bound, prefix + "ffn_b1"));
    f = tape.gelu(f);
    f = tape.add_row_broadcast(tape.matmul(f, p(bound, prefix + "ffn_w2")),
                               p(bound, prefix + "ffn_b2"));
    x = tape.add(x, f);
  }
  return x;
}

ad::Value DetectorModel::head(ad::Tape& tape, const Bound& bound, ad::Value feats) const {
  ad::Value affine = tape.add_row_broadcast(tape.matmul(feats, p(bound, "head.w")),
                                            p(bound, "head.b"));
  ad::Value bounds_conf = tape.sigmoid(tape.slice_cols(affine, 0, 3));
  ad::Value classes = tape.softmax_rows(tape.slice_cols(affine, 3, kNumDysfluencyTypes));
  return tape.concat_cols({bounds_conf, classes});
}

ad::Value DetectorModel::forward(ad::Tape& tape, const Bound& bound, ad::Value input) const {
  return head(tape, bound, temporal(tape, bound, spatial(tape, bound, input)));
}

Eigen::MatrixXd DetectorModel::assemble_input(const alignsynth::AlignmentMatrix& raw) const {
  if (raw.values.rows() != cfg_.pad_text || raw.values.cols() != cfg_.pad_time) {
    throw DataError("assemble_input: alignment matrix is " + std::to_string(raw.values.rows()) +
                    "x" + std::to_string(raw.values.cols()) + ", model expects " +
                    std::to_string(cfg_.pad_text) + "x" + std::to_string(cfg_.pad_time));
  }
  const alignsynth::Preprocessed pre = alignsynth::preprocess(raw);
  Eigen::MatrixXd input(cfg_.input_channels(), cfg_.pad_time);
  input.topRows(cfg_.pad_text) = pre.matrix.values;
  if (cfg_.use_max_channel) input.row(cfg_.pad_text) = pre.column_max.transpose();
  return input;
}

DetectionGrid DetectorModel::predict(const alignsynth::AlignmentMatrix& raw) const {
  return predict_assembled(assemble_input(raw));
}

DetectionGrid DetectorModel::predict_assembled(const Eigen::MatrixXd& input) const {
  ad::Tape tape;
  const Bound bound = bind(tape, false);
  const ad::Value grid = forward(tape, bound, tape.constant(input));
  return DetectionGrid{grid.val()};
}

}  // namespace dysfl::detector
