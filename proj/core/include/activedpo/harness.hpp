#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "activedpo/checkpoint.hpp"
#include "activedpo/config.hpp"
#include "activedpo/design_state.hpp"
#include "activedpo/env.hpp"
#include "activedpo/gradient_feature.hpp"
#include "activedpo/projector.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

// Gradient features of `triplets` under `model`: per response the reward
// gradient is masked, projected and (optionally) normalized, then the two
// sides are differenced.
std::vector<GradientFeature> compute_features(const RewardModel& model,
                                              const std::vector<Triplet>& triplets,
                                              const Projector& projector, bool normalize,
                                              const ParamRange& mask, int model_iteration,
                                              int threads = 1);

struct SelectedItem {
  Triplet triplet;
  double score = 0.0;
  int rank = 0;
};

// The batch chosen at the start of an iteration, waiting for labels.
struct IterationPlan {
  int iteration = 0;
  std::vector<SelectedItem> items;
  int pool_size = 0;
  int pool_dropped = 0;
};

// The outer active-learning loop as a resumable state machine.
//
// Each iteration is split in two so that labels can come from a person:
// begin_iteration() regenerates the candidate pool and selects a batch, and
// complete_iteration() takes the labels, trains, evaluates and persists.
// step() does both with the simulated oracle.
//
// With a run directory, every completed iteration is written atomically and
// resume() continues from the last one. All randomness is drawn from streams
// keyed by the iteration number, so a resumed run reproduces an uninterrupted
// one byte for byte.
class Runner {
 public:
  // In-memory run without persistence.
  explicit Runner(const RunConfig& config);
  // Fresh run persisted under run_dir. Refuses a directory that already holds
  // a run.
  static std::unique_ptr<Runner> create(const RunConfig& config, const std::string& run_dir);
  static std::unique_ptr<Runner> resume(const std::string& run_dir);

  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;
  ~Runner();

  const RunConfig& config() const { return config_; }
  const std::string& config_hash() const { return hash_; }
  const std::string& run_dir() const { return run_dir_; }

  // Number of completed iterations.
  int iteration() const { return iteration_; }
  bool finished() const { return iteration_ >= config_.selection.iterations; }

  const std::vector<Metrics>& history() const { return history_; }
  const std::vector<Triplet>& labeled_triplets() const { return triplets_; }
  const std::vector<PreferenceRecord>& labels() const { return labels_; }
  const DesignState& design() const { return design_; }
  const AnyModel& model() const { return model_; }
  const RewardModel& reward_model() const;
  const PolicyModel& base_policy() const { return base_; }
  const GroundTruthReward& ground_truth() const { return gt_; }
  const PromptSets& prompts() const { return prompts_; }

  // Selects the next batch. Calling it again before completion returns the
  // same plan.
  const IterationPlan& begin_iteration();
  const IterationPlan* pending() const { return pending_ ? &*pending_ : nullptr; }

  // Accepts exactly one label per pending triplet (any order), then trains,
  // evaluates and persists. Returns the new metrics row.
  Metrics complete_iteration(const std::vector<PreferenceRecord>& labels);

  // Labels the pending batch with the simulated oracle.
  std::vector<PreferenceRecord> oracle_labels() const;

  Metrics step();
  // Runs until finished, or until `stop_after` iterations are complete when
  // it is non-negative.
  void run(int stop_after = -1);

  // Evaluates `model` against the initial model on the evaluation prompts.
  EvalResult evaluate_model(const AnyModel& model) const;

 private:
  struct Pending;

  Runner(const RunConfig& config, std::string run_dir);
  void persist_initial();
  void persist_iteration(const Metrics& metrics, const std::vector<SelectedItem>& items,
                         const std::vector<PreferenceRecord>& records, const nlohmann::json& timing);
  void write_state();
  void load_state();
  RewardModel& mutable_reward_model();
  ParamRange feature_mask(const RewardModel& model) const;

  RunConfig config_;
  std::string hash_;
  std::string run_dir_;

  PromptSets prompts_;
  GroundTruthReward gt_;
  std::unique_ptr<PreferenceOracle> oracle_;
  PolicyModel base_;
  AnyModel initial_;
  AnyModel model_;
  std::unique_ptr<Projector> projector_;
  DesignState design_;

  int iteration_ = 0;
  TripletId next_id_ = 0;
  std::vector<Triplet> triplets_;
  std::vector<PreferenceRecord> labels_;
  std::vector<Metrics> history_;

  std::optional<IterationPlan> pending_;
  std::unique_ptr<Pending> pending_detail_;
};

// Runs the whole loop and returns the metrics history.
std::vector<Metrics> run(const RunConfig& config, const std::string& run_dir = "");

struct SummaryRow {
  std::string strategy;
  int column = 0;
  int iteration = 0;
  int seeds = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double win_rate_mean = 0.0;
  double win_rate_std = 0.0;
  std::int64_t labels_used = 0;
};

struct CompareResult {
  // Strategy name per column, in input order.
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds;
  // histories[column][seed index]
  std::vector<std::vector<std::vector<Metrics>>> histories;
  std::vector<SummaryRow> summary;
};

// Runs every config under every seed and aggregates per (strategy,
// iteration). The configs must be identical apart from the selector. When
// out_dir is non-empty each run is persisted under
// out_dir/<column>_<strategy>/seed_<seed> and summary.csv, summary.jsonl and
// final.csv are written.
CompareResult compare(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir = "", int workers = 1);

CompareResult compare(const RunConfig& base, const std::vector<Selector>& strategies,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir = "",
                      int workers = 1);

// Design state binary snapshot (V, V^-1 and bookkeeping).
std::string encode_design(const DesignState& state);
DesignState decode_design(const std::string& bytes);

}  // namespace activedpo
