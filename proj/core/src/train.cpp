// SPDX-License-Identifier: Apache-2.0
#include "dysfl/train.hpp"

#include <cmath>
#include <fstream>

#include "dysfl/tensor_io.hpp"
#include "json_config.hpp"

namespace dysfl::detector {

void TrainConfig::validate() const {
  if (epochs < 1) throw DataError("train config: epochs must be positive");
  if (batch_size < 1) throw DataError("train config: batch_size must be positive");
  if (lr < 0) throw DataError("train config: negative learning rate");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw DataError("train config: betas must be in [0,1)");
  }
}

void Adam::step(ParamStore& store, const ad::Tape& tape,
                const std::vector<ad::Value>& bound_values) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  auto& params = store.all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!tape.reached(bound_values[i])) {
      throw DataError("optimizer: parameter '" + params[i].name +
                      "' was not reached by the loss graph");
    }
    const ad::Mat& g = bound_values[i].grad();
    NamedParam& p = params[i];
    p.adam_m = beta1_ * p.adam_m + (1.0 - beta1_) * g;
    p.adam_v = beta2_ * p.adam_v + (1.0 - beta2_) * g.cwiseProduct(g);
    const ad::Mat m_hat = p.adam_m / bc1;
    const ad::Mat v_hat = p.adam_v / bc2;
    p.value -= lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
  }
}

TrainResult train(DetectorModel& model, const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg, const LossConfig& loss_cfg) {
  cfg.validate();
  loss_cfg.validate();
  if (samples.empty()) throw DataError("train: empty corpus");

  Adam adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  const RandomStream master(cfg.seed);
  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RandomStream epoch_rng = master.child(static_cast<u64>(epoch));
    epoch_rng.shuffle(order);
    EpochStats stats;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      ad::Tape tape;
      const DetectorModel::Bound bound = model.bind(tape, true);
      ad::Value batch_loss;
      LossBreakdown batch_terms;
      for (std::size_t s = at; s < stop; ++s) {
        const TrainSample& sample = samples[order[s]];
        const ad::Value grid = model.forward(tape, bound, tape.constant(sample.input));
        std::array<ad::Value, 3> terms{};
        const ad::Value l = loss_on_tape(tape, grid, sample.targets, loss_cfg, &terms);
        batch_terms.bound += terms[0].val()(0, 0);
        batch_terms.conf += terms[1].val()(0, 0);
        batch_terms.cls += terms[2].val()(0, 0);
        batch_loss = batch_loss.defined() ? tape.add(batch_loss, l) : l;
      }
      const double inv_b = 1.0 / static_cast<double>(stop - at);
      batch_loss = tape.mul_scalar(batch_loss, inv_b);
      const double loss_value = batch_loss.val()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches));
      }
      tape.backward(batch_loss);
      adam.step(model.params(), tape, bound.values);
      stats.total += loss_value;
      stats.bound += batch_terms.bound * inv_b;
      stats.conf += batch_terms.conf * inv_b;
      stats.cls += batch_terms.cls * inv_b;
      ++batches;
    }
    stats.total /= static_cast<double>(batches);
    stats.bound /= static_cast<double>(batches);
    stats.conf /= static_cast<double>(batches);
    stats.cls /= static_cast<double>(batches);
    result.history.push_back(stats);
    result.best_loss = std::min(result.best_loss, stats.total);
  }
  return result;
}

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  using nlohmann::json;
  json params = json::object();
  const auto& all = model.params().all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    char file[32];
    std::snprintf(file, sizeof(file), "p%04zu.stsf", i);
    write_matrix(all[i].value, dir / file);
    params[all[i].name] = json{
        {"file", file},
        {"shape", {all[i].value.rows(), all[i].value.cols()}},
    };
  }
  json index{{"schema_version", 1},
             {"model", detail::to_json(model.config())},
             {"params", std::move(params)}};
  std::ofstream os(dir / "index.json", std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint index in " + dir.string());
  os << index.dump(2) << '\n';
}

DetectorModel load_checkpoint(const std::filesystem::path& dir) {
  using nlohmann::json;
  std::ifstream is(dir / "index.json");
  if (!is) throw DataError("cannot open checkpoint index: " + (dir / "index.json").string());
  json index;
  try {
    index = json::parse(is);
  } catch (const json::exception& e) {
    throw DataError("bad checkpoint index: " + std::string(e.what()));
  }
  const ModelConfig cfg = detail::model_config_from_json(index.at("model"));
  DetectorModel model(cfg, 0);
  const json& params = index.at("params");
  for (NamedParam& p : model.params().all()) {
    if (!params.contains(p.name)) {
      throw DataError("checkpoint missing parameter '" + p.name + "'");
    }
    const json& entry = params.at(p.name);
    const Eigen::MatrixXd loaded =
        read_matrix_d(dir / entry.at("file").get<std::string>());
    if (loaded.rows() != p.value.rows() || loaded.cols() != p.value.cols()) {
      throw DataError("checkpoint parameter '" + p.name + "' has shape " +
                      std::to_string(loaded.rows()) + "x" + std::to_string(loaded.cols()) +
                      ", expected " + std::to_string(p.value.rows()) + "x" +
                      std::to_string(p.value.cols()));
    }
    p.value = loaded;
  }
  return model;
}

}  // namespace dysfl::detector
