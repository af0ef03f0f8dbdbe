#pragma once

#include <Eigen/Core>

#include "activedpo/config.hpp"
#include "activedpo/mlp.hpp"
#include "activedpo/reward_model.hpp"

namespace activedpo {

struct DirectRewardArchitecture {
  int vocab_size = 0;
  int width = 0;
  // Number of hidden layers.
  int depth = 0;
  bool mirrored_input = true;

  friend bool operator==(const DirectRewardArchitecture&, const DirectRewardArchitecture&) =
      default;
};

// Scalar reward network r_theta(z) over the fixed pair encoding z.
//
// With mirrored inputs the initialization duplicates every hidden block and
// negates the output weights of the second copy, so r_theta0(z) = 0 for any
// z whose halves agree, and swapping the halves of z negates the output.
class DirectRewardNet final : public RewardModel {
 public:
  DirectRewardNet(DirectRewardArchitecture arch, Eigen::VectorXd theta);
  DirectRewardNet(DirectRewardArchitecture arch, Eigen::VectorXd theta, Eigen::VectorXd theta0);

  static DirectRewardNet initialize(const RunConfig& config);
  static DirectRewardArchitecture architecture_from(const ModelConfig& model);

  const DirectRewardArchitecture& architecture() const { return arch_; }
  const Mlp& network() const { return net_; }

  // Raw network output on an explicit encoding.
  double output_at(const Eigen::VectorXd& params, const Eigen::VectorXd& z,
                   Eigen::VectorXd* grad = nullptr) const;

  std::size_t num_params() const override { return net_.num_params(); }
  const Eigen::VectorXd& params() const override { return theta_; }
  void set_params(const Eigen::VectorXd& params) override;
  const Eigen::VectorXd& anchor() const override { return theta0_; }
  double reward_at(const Eigen::VectorXd& params, const TokenSeq& prompt,
                   const TokenSeq& response, Eigen::VectorXd* grad) const override;
  std::pair<std::size_t, std::size_t> output_layer_range() const override;
  std::unique_ptr<RewardModel> clone() const override;

 private:
  DirectRewardArchitecture arch_;
  Mlp net_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd theta0_;
};

}  // namespace activedpo
