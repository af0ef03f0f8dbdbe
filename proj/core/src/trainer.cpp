#include "activedpo/trainer.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "activedpo/errors.hpp"
#include "activedpo/parallel.hpp"

namespace activedpo {

using Eigen::VectorXd;

double neg_log_sigmoid(double z) {
  if (z >= 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dpo_loss_at(const RewardModel& model, const VectorXd& params,
                   std::span<const LabeledPair> pairs, const LossOptions& options, VectorXd* grad,
                   int threads) {
  if (pairs.empty()) throw InvalidArgument("dpo loss needs at least one labeled pair");
  if (static_cast<std::size_t>(params.size()) != model.num_params()) {
    throw DimensionError("parameter vector does not match the model");
  }
  const std::size_t n = pairs.size();
  std::vector<double> losses(n);
  std::vector<VectorXd> grads(grad != nullptr ? n : 0);

  parallel_for(n, threads, [&](std::size_t i) {
    const LabeledPair& p = pairs[i];
    if (grad == nullptr) {
      const double margin = model.reward_at(params, *p.prompt, *p.winner, nullptr) -
                            model.reward_at(params, *p.prompt, *p.loser, nullptr);
      losses[i] = neg_log_sigmoid(margin);
      return;
    }
    VectorXd g_w;
    VectorXd g_l;
    const double margin = model.reward_at(params, *p.prompt, *p.winner, &g_w) -
                          model.reward_at(params, *p.prompt, *p.loser, &g_l);
    losses[i] = neg_log_sigmoid(margin);
    // d/dz [-log sigmoid(z)] = -sigmoid(-z)
    grads[i] = -sigmoid(-margin) * (g_w - g_l);
  });

  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (double l : losses) loss += l;
  loss *= inv_n;
  if (grad != nullptr) {
    grad->setZero(params.size());
    for (const auto& g : grads) *grad += g;
    *grad *= inv_n;
  }

  if (options.kind == TrainerKind::DpoRegularized && options.reg_lambda > 0.0) {
    const VectorXd diff = params - model.anchor();
    loss += 0.5 * options.reg_lambda * diff.squaredNorm();
    if (grad != nullptr) *grad += options.reg_lambda * diff;
  }
  return loss;
}

TrainReport train(RewardModel& model, std::span<const LabeledPair> pairs,
                  const TrainingConfig& config, RngStream& shuffle_stream, int threads) {
  if (pairs.empty()) throw InvalidArgument("training needs at least one labeled pair");
  const LossOptions options{config.trainer, config.reg_lambda};

  TrainReport report;
  report.epochs = config.epochs_per_iteration;
  report.initial_loss = dpo_loss_at(model, model.params(), pairs, options, nullptr, threads);

  VectorXd theta = model.params();
  VectorXd velocity = VectorXd::Zero(theta.size());
  VectorXd grad;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledPair> batch;
  double lr = config.learning_rate;

  for (int epoch = 0; epoch < config.epochs_per_iteration; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_stream.uniform_int(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
      const std::size_t end = std::min(order.size(), start + config.minibatch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(pairs[order[k]]);

      const double loss = dpo_loss_at(model, theta, batch, options, &grad, threads);
      const double grad_norm = grad.norm();
      if (!std::isfinite(loss) || !std::isfinite(grad_norm)) {
        const nlohmann::json dump = {{"epoch", epoch},
                                     {"step", report.steps},
                                     {"learning_rate", lr},
                                     {"loss", std::isfinite(loss) ? nlohmann::json(loss) : nlohmann::json("non-finite")},
                                     {"grad_norm", std::isfinite(grad_norm) ? nlohmann::json(grad_norm) : nlohmann::json("non-finite")},
                                     {"param_norm", theta.norm()},
                                     {"batch_size", batch.size()}};
        throw TrainingDiverged("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                                   ", step " + std::to_string(report.steps),
                               dump.dump());
      }
      report.grad_norms.push_back(grad_norm);
      velocity = config.momentum * velocity + grad;
      theta -= lr * velocity;
      ++report.steps;
    }
    lr *= config.lr_decay;
  }

  model.set_params(theta);
  report.final_loss = dpo_loss_at(model, theta, pairs, options, nullptr, threads);
  report.param_distance = (theta - model.anchor()).norm();
  return report;
}

}  // namespace activedpo
