#pragma once

#include <vector>

#include "activedpo/config.hpp"
#include "activedpo/design_state.hpp"
#include "activedpo/gradient_feature.hpp"
#include "activedpo/reward_model.hpp"
#include "activedpo/rng.hpp"

namespace activedpo {

struct SelectionResult {
  std::vector<TripletId> ids;
  std::vector<double> scores;
  // Number of candidates sharing the winning score at each pick (1 = no tie).
  std::vector<int> tie_counts;
};

// Candidates offered to a selector. `features` is required by the
// uncertainty strategies, `margins` by the margin strategies; ids always.
struct SelectionPool {
  std::vector<TripletId> ids;
  std::vector<GradientFeature> features;
  std::vector<double> margins;
};

enum class TieBreak { LowestId, Random };

// Scores within this relative distance of the best are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

// Greedy uncertainty selection: B rounds of argmax ||phi||_{V^-1} over the
// remaining pool, absorbing each pick into `state` before the next round.
SelectionResult select_greedy(const std::vector<GradientFeature>& pool, DesignState& state,
                              int batch_size, TieBreak ties = TieBreak::LowestId,
                              RngStream* tie_stream = nullptr);

// Uniform sampling without replacement.
SelectionResult select_random(const std::vector<TripletId>& ids, int batch_size,
                              RngStream& stream);

// Top (largest = true) or bottom B by margin, lowest id first among equals.
SelectionResult select_by_margin(const std::vector<TripletId>& ids,
                                 const std::vector<double>& margins, int batch_size,
                                 bool largest);

// Dispatch on strategy. active_dpo and frozen_feature both run select_greedy;
// they differ only in which parameters produced the features.
SelectionResult select_batch(const SelectionPool& pool, DesignState& state, int batch_size,
                             Selector strategy, RngStream& tie_stream, bool random_ties);

// |r(x, y_a) - r(x, y_b)| under the model's current parameters.
double margin_score(const RewardModel& model, const Triplet& triplet);

}  // namespace activedpo
