// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "dysfl/autodiff.hpp"
#include "dysfl/model.hpp"
#include "dysfl/types.hpp"

namespace dysfl::detector {

struct LossConfig {
  double lambda_bound = 5.0;
  double lambda_conf = 1.0;
  double lambda_class = 0.5;
  double eps = 1e-7;  // probability clamp
  // The class term is masked to object regions (class targets are undefined
  // elsewhere); the unmasked variant follows the printed equation verbatim.
  bool class_masked_by_obj = true;

  void validate() const;
};

/// Weighted terms; total == bound + conf + cls exactly.
struct LossBreakdown {
  double total = 0;
  double bound = 0;
  double conf = 0;
  double cls = 0;
};

/// Builds the detection loss on a tape over an activated grid node:
///   lambda_bound/S * sum_obj[(b - b_hat)^2]            (start and end)
/// - lambda_conf/S  * sum_all[t log p + (1-t) log(1-p)]  (confidence BCE)
/// - lambda_class/S * sum_obj[c log p_class]             (class CE)
/// Optionally exposes the three weighted term nodes.
ad::Value loss_on_tape(ad::Tape& tape, ad::Value grid,
                       const std::vector<RegionTarget>& targets, const LossConfig& cfg,
                       std::array<ad::Value, 3>* term_nodes = nullptr);

struct LossResult {
  LossBreakdown terms;
  Eigen::MatrixXd grad;  // d(total)/d(grid), same shape as the grid
};

/// Loss value, per-term breakdown and the gradient w.r.t. the activated grid.
LossResult compute_loss(const DetectionGrid& grid, const std::vector<RegionTarget>& targets,
                        const LossConfig& cfg);

}  // namespace dysfl::detector
