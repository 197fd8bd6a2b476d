// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dysfl/loss.hpp"
#include "dysfl/model.hpp"
#include "dysfl/types.hpp"

namespace dysfl::detector {

/// Optimizer and schedule defaults: Adam with betas (0.9, 0.999), learning
/// rate 3e-4, batch size 64, 30 epochs, no dropout or weight decay.
struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  u64 seed = 0;

  void validate() const;
};

struct TrainSample {
  std::string id;
  Language language = Language::English;
  Eigen::MatrixXd input;  // assembled channels x pad_time
  std::vector<RegionTarget> targets;
};

struct EpochStats {
  double total = 0;
  double bound = 0;
  double conf = 0;
  double cls = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double best_loss = 0;
};

/// Adam over a ParamStore; per-parameter moments live in the store. Throws
/// if a parameter was never reached by the loss graph.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store, const ad::Tape& tape,
            const std::vector<ad::Value>& bound_values);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Single-threaded, deterministic mini-batch training: same seed, same data
/// order, bit-identical trajectory. Aborts with NumericError on NaN loss.
TrainResult train(DetectorModel& model, const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg, const LossConfig& loss_cfg);

/// Checkpoints: one tensor file per parameter plus an index.json mapping
/// {name -> file, shape} and carrying the model configuration.
void save_checkpoint(const DetectorModel& model, const std::filesystem::path& dir);
DetectorModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace dysfl::detector
