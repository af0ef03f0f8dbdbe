#pragma once

#include <cstddef>
#include <memory>
#include <utility>

#include <Eigen/Core>

#include "activedpo/types.hpp"

namespace activedpo {

// A differentiable scalar reward r_theta(x, y) over a flat parameter vector.
// Implemented by the policy's implicit reward and by DirectRewardNet; the
// selector and trainer only see this interface.
class RewardModel {
 public:
  virtual ~RewardModel() = default;

  virtual std::size_t num_params() const = 0;
  virtual const Eigen::VectorXd& params() const = 0;
  virtual void set_params(const Eigen::VectorXd& params) = 0;
  // theta_0: the reference / initial snapshot the model is anchored to.
  virtual const Eigen::VectorXd& anchor() const = 0;

  // Reward at an arbitrary parameter vector. When grad is non-null it is
  // overwritten with the gradient w.r.t. params. The value is computed by the
  // same code path with or without the gradient.
  virtual double reward_at(const Eigen::VectorXd& params, const TokenSeq& prompt,
                           const TokenSeq& response, Eigen::VectorXd* grad) const = 0;

  // Half-open index range of the output layer inside the parameter vector.
  virtual std::pair<std::size_t, std::size_t> output_layer_range() const = 0;

  virtual std::unique_ptr<RewardModel> clone() const = 0;

  double reward(const TokenSeq& prompt, const TokenSeq& response) const {
    return reward_at(params(), prompt, response, nullptr);
  }

  double reward_and_grad(const TokenSeq& prompt, const TokenSeq& response,
                         Eigen::VectorXd& grad) const {
    return reward_at(params(), prompt, response, &grad);
  }
};

}  // namespace activedpo
