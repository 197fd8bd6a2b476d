// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dysfl/alignsynth.hpp"
#include "dysfl/autodiff.hpp"
#include "dysfl/rng.hpp"
#include "dysfl/types.hpp"

namespace dysfl::detector {

// The detector always predicts over 64 regions, 8 values per region:
// start bound, end bound, confidence, then the 5 class scores.
inline constexpr int kNumRegions = 64;
inline constexpr int kGridCols = 3 + kNumDysfluencyTypes;

/// One spatial pattern collector block: a strided depthwise convolution over
/// time followed by a grouped 1x1 convolution that mixes channels within
/// groups only, ReLU after each.
struct SpatialBlockConfig {
  int in_channels = 64;
  int out_channels = 64;
  int kernel = 3;  // depthwise kernel; grouped convolution uses kernel 1
  int groups = 4;
  int stride = 2;
};

struct ModelConfig {
  int pad_text = 64;
  int pad_time = 256;
  bool use_max_channel = true;  // append the per-column max as an extra channel
  std::vector<SpatialBlockConfig> spatial;
  int layers = 2;
  int heads = 4;
  int width = 64;
  int ffn_dim = 128;

  int input_channels() const { return pad_text + (use_max_channel ? 1 : 0); }
  void validate() const;
  static ModelConfig desk_default();
};

/// Activated detector output: regions x 8 with bounds/confidence in (0,1)
/// and class scores summing to one per region.
struct DetectionGrid {
  Eigen::MatrixXd values;

  int regions() const { return static_cast<int>(values.rows()); }
  double b_start(int i) const { return values(i, 0); }
  double b_end(int i) const { return values(i, 1); }
  double confidence(int i) const { return values(i, 2); }
  double class_score(int i, int j) const { return values(i, 3 + j); }
  int argmax_class(int i) const;
};
void validate(const DetectionGrid& grid);

struct NamedParam {
  std::string name;
  ad::Mat value;
  ad::Mat adam_m;
  ad::Mat adam_v;
};

class ParamStore {
 public:
  ad::Mat& add(const std::string& name, ad::Mat init);
  std::vector<NamedParam>& all() { return params_; }
  const std::vector<NamedParam>& all() const { return params_; }
  const ad::Mat& value(const std::string& name) const;
  ad::Mat& value(const std::string& name);
  std::size_t size() const { return params_.size(); }
  i64 scalar_count() const;

 private:
  std::vector<NamedParam> params_;
  std::map<std::string, std::size_t> index_;
};

class DetectorModel {
 public:
  /// Builds parameters with Xavier-uniform init drawn from `init_seed`.
  DetectorModel(ModelConfig cfg, u64 init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Per-tape parameter binding, aligned with params().all() order.
  struct Bound {
    std::vector<ad::Value> values;
    const ad::Value& at(std::size_t i) const { return values[i]; }
  };
  Bound bind(ad::Tape& tape, bool trainable) const;

  /// Spatial pattern collector: (channels x pad_time) -> (64 x width).
  ad::Value spatial(ad::Tape& tape, const Bound& bound, ad::Value input) const;
  /// Pre-norm transformer encoder; zero layers is the identity. Positional
  /// encodings are added inside, so shifted inputs produce shifted outputs.
  ad::Value temporal(ad::Tape& tape, const Bound& bound, ad::Value feats,
                     std::vector<ad::Mat>* attention = nullptr) const;
  /// Detection head: affine to 64x8, sigmoid on bounds and confidence,
  /// softmax over the class scores.
  ad::Value head(ad::Tape& tape, const Bound& bound, ad::Value feats) const;
  /// spatial -> temporal -> head.
  ad::Value forward(ad::Tape& tape, const Bound& bound, ad::Value input) const;

  /// Softmax preprocessing plus the optional max channel, as model input.
  Eigen::MatrixXd assemble_input(const alignsynth::AlignmentMatrix& raw) const;
  /// Full inference on one raw alignment matrix.
  DetectionGrid predict(const alignsynth::AlignmentMatrix& raw) const;
  DetectionGrid predict_assembled(const Eigen::MatrixXd& input) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
  ad::Mat positional_;  // kNumRegions x width, fixed sinusoidal table
  std::map<std::string, std::size_t> slot_;  // name -> bound index

  const ad::Value& p(const Bound& bound, const std::string& name) const;
};

}  // namespace dysfl::detector
