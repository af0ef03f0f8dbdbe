#pragma once

#include <vector>

#include <Eigen/Core>

#include "activedpo/config.hpp"
#include "activedpo/mlp.hpp"
#include "activedpo/reward_model.hpp"
#include "activedpo/rng.hpp"

namespace activedpo {

struct PolicyArchitecture {
  int vocab_size = 0;
  int prompt_len = 0;
  int response_len = 0;
  std::vector<int> hidden_widths;
  double beta = 1.0;

  friend bool operator==(const PolicyArchitecture&, const PolicyArchitecture&) = default;
};

// Tiny autoregressive policy over fixed-length token sequences.
//
// The next-token distribution at response position j is a tanh MLP over a
// bag-of-tokens view of the context (prompt + y[0..j)): prompt token
// frequencies, prefix token counts, a one-hot of the previous token, and a
// one-hot of the position. Its implicit reward is
// beta * (log pi_theta(y|x) - log pi_ref(y|x)), with pi_ref frozen at the
// parameters given at construction.
class PolicyModel final : public RewardModel {
 public:
  PolicyModel(PolicyArchitecture arch, Eigen::VectorXd theta);
  PolicyModel(PolicyArchitecture arch, Eigen::VectorXd theta, Eigen::VectorXd theta_ref);

  // Random initialization from the model_init seed stream, followed by the
  // optional maximum-likelihood warm-up when model.sft_steps > 0.
  static PolicyModel initialize(const RunConfig& config);
  static PolicyArchitecture architecture_from(const ModelConfig& model);

  const PolicyArchitecture& architecture() const { return arch_; }
  const Mlp& network() const { return net_; }
  double beta() const { return arch_.beta; }
  void set_beta(double beta);

  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& theta_ref() const { return theta_ref_; }
  // Freezes the current parameters as the new reference.
  void reset_reference() { theta_ref_ = theta_; }

  // Sum over response positions of log p(y_j | x, y_<j) under `params`.
  // When grad is non-null it receives the gradient (overwritten).
  double log_prob_at(const Eigen::VectorXd& params, const TokenSeq& prompt,
                     const TokenSeq& response, Eigen::VectorXd* grad = nullptr) const;
  double log_prob(const TokenSeq& prompt, const TokenSeq& response) const {
    return log_prob_at(theta_, prompt, response);
  }
  double reference_log_prob(const TokenSeq& prompt, const TokenSeq& response) const {
    return log_prob_at(theta_ref_, prompt, response);
  }

  // beta * (log pi_theta - log pi_ref).
  double implicit_reward(const TokenSeq& prompt, const TokenSeq& response) const {
    return reward(prompt, response);
  }

  // Log-probabilities of the next token given prompt and response prefix.
  Eigen::VectorXd next_token_log_probs(const Eigen::VectorXd& params, const TokenSeq& prompt,
                                       const TokenSeq& prefix) const;

  // Ancestral sampling of `count` responses.
  std::vector<TokenSeq> generate(const TokenSeq& prompt, int count, RngStream& stream) const;
  TokenSeq sample(const TokenSeq& prompt, RngStream& stream) const;

  // RewardModel
  std::size_t num_params() const override { return net_.num_params(); }
  const Eigen::VectorXd& params() const override { return theta_; }
  void set_params(const Eigen::VectorXd& params) override;
  const Eigen::VectorXd& anchor() const override { return theta_ref_; }
  double reward_at(const Eigen::VectorXd& params, const TokenSeq& prompt,
                   const TokenSeq& response, Eigen::VectorXd* grad) const override;
  std::pair<std::size_t, std::size_t> output_layer_range() const override;
  std::unique_ptr<RewardModel> clone() const override;

  int input_dim() const { return net_.input_dim(); }

 private:
  void check_lengths(const TokenSeq& prompt, const TokenSeq& response) const;
  void encode_context(const TokenSeq& prompt, const TokenSeq& response, int position,
                      Eigen::VectorXd& input) const;

  PolicyArchitecture arch_;
  Mlp net_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd theta_ref_;
};

// Maximum-likelihood warm-up standing in for SFT: fits the policy to
// sequences drawn from a fixed random bigram chain (independent of any
// reward), then re-anchors the reference at the result.
void sft_warmup(PolicyModel& model, int steps, double learning_rate, std::uint64_t seed);

}  // namespace activedpo
