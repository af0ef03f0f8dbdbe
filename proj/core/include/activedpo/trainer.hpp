#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "activedpo/config.hpp"
#include "activedpo/reward_model.hpp"
#include "activedpo/rng.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

struct LossOptions {
  TrainerKind kind = TrainerKind::Dpo;
  // Weight of (reg_lambda / 2) ||theta - theta_0||^2; used by dpo_regularized.
  double reg_lambda = 0.0;
};

// Mean over pairs of -log sigmoid(r(x, y_w) - r(x, y_l)), plus the squared
// l2 pull towards the model's anchor for the regularized variant. Evaluated
// at `params`; grad (if non-null) is overwritten with the gradient.
double dpo_loss_at(const RewardModel& model, const Eigen::VectorXd& params,
                   std::span<const LabeledPair> pairs, const LossOptions& options,
                   Eigen::VectorXd* grad = nullptr, int threads = 1);

inline double dpo_loss(const RewardModel& model, std::span<const LabeledPair> pairs,
                       const LossOptions& options = {}) {
  return dpo_loss_at(model, model.params(), pairs, options);
}

// -log sigmoid(z), stable for large |z|.
double neg_log_sigmoid(double z);
double sigmoid(double z);

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
  int steps = 0;
  std::vector<double> grad_norms;
  // ||theta - theta_0|| after training.
  double param_distance = 0.0;
};

// Minibatch gradient descent with optional momentum and per-epoch step
// decay. Shuffling draws from `shuffle_stream`. Throws TrainingDiverged on a
// non-finite loss or gradient.
TrainReport train(RewardModel& model, std::span<const LabeledPair> pairs,
                  const TrainingConfig& config, RngStream& shuffle_stream, int threads = 1);

}  // namespace activedpo
