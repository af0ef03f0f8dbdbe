#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "activedpo/config.hpp"
#include "activedpo/policy_model.hpp"
#include "activedpo/rng.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

// Synthetic ground-truth reward r*(x, y) in [-1, 1], a fixed function of the
// pair encoding z (unmirrored):
//   linear       gain * w.z
//   mlp2         w2 . tanh(gain * W1 z + b1) + b2
//   length_bias  mlp2 + coef * distinct_tokens(y) / |y|
// All weights are drawn from the oracle seed.
class GroundTruthReward {
 public:
  static GroundTruthReward from_config(const RunConfig& config);
  static GroundTruthReward linear(int vocab_size, Eigen::VectorXd weights);

  GroundTruthKind kind() const { return kind_; }

  // Unclamped value.
  double raw(const TokenSeq& prompt, const TokenSeq& response) const;
  // Clamped to [-1, 1].
  double operator()(const TokenSeq& prompt, const TokenSeq& response) const;

 private:
  GroundTruthReward() = default;

  GroundTruthKind kind_ = GroundTruthKind::Mlp2;
  int vocab_size_ = 0;
  double gain_ = 1.0;
  double length_bias_coef_ = 0.0;
  Eigen::VectorXd linear_;
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
};

double true_reward(const GroundTruthReward& gt, const TokenSeq& prompt, const TokenSeq& response);

// P(A preferred) under Bradley-Terry-Luce: sigmoid(r*(x, a) - r*(x, b)).
double btl_probability(const GroundTruthReward& gt, const Triplet& triplet);

PreferenceRecord btl_label(const GroundTruthReward& gt, const Triplet& triplet, RngStream& stream,
                           int iteration = 0);

// Source of simulated preference labels for the harness.
class PreferenceOracle {
 public:
  virtual ~PreferenceOracle() = default;
  // Label for `triplet` at `iteration`; a pure function of the oracle seed,
  // the triplet and the iteration.
  virtual PreferenceRecord label(const Triplet& triplet, int iteration) const = 0;
};

class BtlOracle final : public PreferenceOracle {
 public:
  BtlOracle(GroundTruthReward gt, std::uint64_t seed) : gt_(std::move(gt)), seed_(seed) {}
  PreferenceRecord label(const Triplet& triplet, int iteration) const override;
  const GroundTruthReward& ground_truth() const { return gt_; }

 private:
  GroundTruthReward gt_;
  std::uint64_t seed_;
};

// Labels from an external file of precomputed preference logits. Each line is
// {"triplet": "<16 hex digit content hash>", "score": s}; A wins with
// probability sigmoid(s).
class ImportedScoreOracle final : public PreferenceOracle {
 public:
  ImportedScoreOracle(std::unordered_map<std::uint64_t, double> scores, std::uint64_t seed)
      : scores_(std::move(scores)), seed_(seed) {}
  static ImportedScoreOracle load(const std::string& path, std::uint64_t seed);
  PreferenceRecord label(const Triplet& triplet, int iteration) const override;

 private:
  std::unordered_map<std::uint64_t, double> scores_;
  std::uint64_t seed_;
};

std::unique_ptr<PreferenceOracle> make_oracle(const RunConfig& config);

// Uniform random prompts.
std::vector<TokenSeq> synthetic_prompts(int count, int vocab_size, int length, RngStream& stream);

// One JSON array of token ids per line, validated against vocab and length.
std::vector<TokenSeq> load_prompts(const std::string& path, int vocab_size, int length);

// Training prompt dataset and disjoint evaluation prompts.
struct PromptSets {
  std::vector<TokenSeq> train;
  std::vector<TokenSeq> eval;
};
PromptSets make_prompt_sets(const RunConfig& config);

// Prompts used at iteration t: n_x drawn without replacement from the dataset.
std::vector<TokenSeq> prompts_for_iteration(const std::vector<TokenSeq>& dataset, int count,
                                            std::uint64_t seed, int iteration);

struct CandidatePool {
  std::vector<Triplet> triplets;
  // Responses sampled per prompt, indexed [prompt][response].
  std::vector<std::vector<TokenSeq>> responses;
  // For each triplet: (prompt index, response index a, response index b).
  std::vector<std::array<int, 3>> sources;
  int dropped = 0;
};

// Samples m_pairs responses per prompt (prompt i uses stream.child(i)) and
// emits every unordered pair as a triplet, dropping identical pairs. Ids are
// assigned consecutively from first_id.
CandidatePool build_pool(const PolicyModel& model, const std::vector<TokenSeq>& prompts,
                         int m_pairs, const RngStream& stream, TripletId first_id, int iteration,
                         int threads = 1);

using ResponseGenerator = std::function<TokenSeq(const TokenSeq& prompt, RngStream& stream)>;

struct EvalResult {
  double mean_true_reward = 0.0;
  double win_rate = 0.5;
};

// Average ground-truth reward of `trained` responses, and the fraction of
// (prompt, sample) slots where the trained response beats the initial one
// (ties count one half). Both generators see the same stream per slot.
EvalResult evaluate(const ResponseGenerator& trained, const ResponseGenerator& initial,
                    const GroundTruthReward& gt, const std::vector<TokenSeq>& prompts,
                    int samples_per_prompt, std::uint64_t seed);

EvalResult evaluate(const PolicyModel& trained, const PolicyModel& initial,
                    const GroundTruthReward& gt, const std::vector<TokenSeq>& prompts,
                    int samples_per_prompt, std::uint64_t seed);

}  // namespace activedpo
