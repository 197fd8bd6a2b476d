// SPDX-License-Identifier: Apache-2.0
#include "dysfl/loss.hpp"

namespace dysfl::detector {

void LossConfig::validate() const {
  if (lambda_bound <= 0 || lambda_conf <= 0 || lambda_class <= 0) {
    throw DataError("loss config: balancing factors must be positive");
  }
  if (!(eps > 0.0) || eps > 0.01) throw DataError("loss config: eps must be in (0, 0.01]");
}

ad::Value loss_on_tape(ad::Tape& tape, ad::Value grid,
                       const std::vector<RegionTarget>& targets, const LossConfig& cfg,
                       std::array<ad::Value, 3>* term_nodes) {
  cfg.validate();
  const auto regions = static_cast<Eigen::Index>(targets.size());
  if (grid.rows() != regions || grid.cols() != kGridCols) {
    throw DataError("loss: grid is " + std::to_string(grid.rows()) + "x" +
                    std::to_string(grid.cols()) + ", targets imply " +
                    std::to_string(regions) + "x" + std::to_string(kGridCols));
  }
  const double inv_s = 1.0 / static_cast<double>(regions);

  ad::Mat t_bounds(regions, 2);
  ad::Mat m_obj2(regions, 2);
  ad::Mat t_conf(regions, 1);
  ad::Mat t_conf_neg(regions, 1);
  ad::Mat t_cls(regions, kNumDysfluencyTypes);
  ad::Mat m_cls(regions, kNumDysfluencyTypes);
  for (Eigen::Index i = 0; i < regions; ++i) {
    const RegionTarget& t = targets[static_cast<std::size_t>(i)];
    t_bounds(i, 0) = t.b_start;
    t_bounds(i, 1) = t.b_end;
    m_obj2(i, 0) = m_obj2(i, 1) = t.obj;
    t_conf(i, 0) = t.obj;
    t_conf_neg(i, 0) = 1.0 - t.obj;
    for (int j = 0; j < kNumDysfluencyTypes; ++j) {
      t_cls(i, j) = t.class_onehot[static_cast<std::size_t>(j)];
      m_cls(i, j) = cfg.class_masked_by_obj ? t.obj : 1.0;
    }
  }

  const ad::Value pred_b = tape.slice_cols(grid, 0, 2);
  const ad::Value pred_conf = tape.slice_cols(grid, 2, 1);
  const ad::Value pred_cls = tape.slice_cols(grid, 3, kNumDysfluencyTypes);

  const ad::Value bound_term = tape.mul_scalar(
      tape.sum(tape.mul(tape.constant(m_obj2), tape.square(tape.sub(pred_b, tape.constant(t_bounds))))),
      cfg.lambda_bound * inv_s);

  const double lo = cfg.eps;
  const double hi = 1.0 - cfg.eps;
  const ad::Value conf_pos =
      tape.mul(tape.constant(t_conf), tape.log_clamped(pred_conf, lo, hi));
  const ad::Value conf_neg = tape.mul(tape.constant(t_conf_neg),
                                      tape.log_clamped(tape.rsub_scalar(pred_conf, 1.0), lo, hi));
  const ad::Value conf_term =
      tape.mul_scalar(tape.sum(tape.add(conf_pos, conf_neg)), -cfg.lambda_conf * inv_s);

  const ad::Value cls_term = tape.mul_scalar(
      tape.sum(tape.mul(tape.constant(m_cls),
                        tape.mul(tape.constant(t_cls), tape.log_clamped(pred_cls, lo, hi)))),
      -cfg.lambda_class * inv_s);

  if (term_nodes != nullptr) *term_nodes = {bound_term, conf_term, cls_term};
  return tape.add(tape.add(bound_term, conf_term), cls_term);
}

LossResult compute_loss(const DetectionGrid& grid, const std::vector<RegionTarget>& targets,
                        const LossConfig& cfg) {
  ad::Tape tape;
  const ad::Value pred = tape.leaf(grid.values);
  std::array<ad::Value, 3> terms{};
  const ad::Value total = loss_on_tape(tape, pred, targets, cfg, &terms);
  tape.backward(total);
  LossResult result;
  result.terms.total = total.val()(0, 0);
  result.terms.bound = terms[0].val()(0, 0);
  result.terms.conf = terms[1].val()(0, 0);
  result.terms.cls = terms[2].val()(0, 0);
  result.grad = tape.reached(pred)
                    ? pred.grad()
                    : Eigen::MatrixXd::Zero(grid.values.rows(), grid.values.cols());
  return result;
}

}  // namespace dysfl::detector
