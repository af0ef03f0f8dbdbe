#include "activedpo/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "activedpo/errors.hpp"

namespace activedpo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_pool(std::size_t pool_size, int batch_size) {
  if (batch_size < 0) throw InvalidArgument("batch size must be non-negative");
  if (pool_size < static_cast<std::size_t>(batch_size)) {
    throw PoolExhausted("pool of " + std::to_string(pool_size) + " candidates cannot fill a batch of " +
                        std::to_string(batch_size));
  }
}

void check_unique(const std::vector<TripletId>& ids) {
  std::set<TripletId> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) throw InvalidArgument("candidate pool contains duplicate ids");
}

}  // namespace

SelectionResult select_greedy(const std::vector<GradientFeature>& pool, DesignState& state,
                              int batch_size, TieBreak ties, RngStream* tie_stream) {
  check_pool(pool.size(), batch_size);
  if (ties == TieBreak::Random && tie_stream == nullptr) {
    throw InvalidArgument("random tie breaking needs a stream");
  }
  const auto n = static_cast<Eigen::Index>(pool.size());
  const int d = state.dim();
  MatrixXd phis(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pool[i].phi.size() != d) throw DimensionError("feature dimension does not match design state");
    phis.col(i) = pool[i].phi;
  }
  {
    std::vector<TripletId> ids;
    for (const auto& f : pool) ids.push_back(f.triplet_id);
    check_unique(ids);
  }

  // Squared scores phi_i^T V^-1 phi_i, downdated after each absorb by
  // (u^T phi_i)^2 / (1 + phi_p^T u) with u = V^-1 phi_p.
  VectorXd sq = (phis.array() * (state.v_inv() * phis).array()).colwise().sum().transpose();
  std::vector<bool> taken(pool.size(), false);

  SelectionResult result;
  std::vector<std::size_t> tied;
  for (int b = 0; b < batch_size; ++b) {
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!taken[i]) best = std::max(best, std::sqrt(std::max(sq[i], 0.0)));
    }
    const double threshold = best - kTieTolerance * std::max(1.0, best);
    tied.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!taken[i] && std::sqrt(std::max(sq[i], 0.0)) >= threshold) tied.push_back(i);
    }
    std::size_t pick = tied.front();
    if (ties == TieBreak::Random && tied.size() > 1) {
      pick = tied[tie_stream->uniform_int(tied.size())];
    } else {
      for (std::size_t i : tied) {
        if (pool[i].triplet_id < pool[pick].triplet_id) pick = i;
      }
    }

    taken[pick] = true;
    result.ids.push_back(pool[pick].triplet_id);
    result.scores.push_back(std::sqrt(std::max(sq[pick], 0.0)));
    result.tie_counts.push_back(static_cast<int>(tied.size()));

    const VectorXd& phi = pool[pick].phi;
    const VectorXd u = state.v_inv() * phi;
    const double denom = 1.0 + phi.dot(u);
    const VectorXd cross = phis.transpose() * u;
    sq.array() -= cross.array().square() / denom;
    state.absorb(phi);
  }
  return result;
}

SelectionResult select_random(const std::vector<TripletId>& ids, int batch_size,
                              RngStream& stream) {
  check_pool(ids.size(), batch_size);
  check_unique(ids);
  std::vector<TripletId> order = ids;
  SelectionResult result;
  for (int b = 0; b < batch_size; ++b) {
    const std::size_t j = b + stream.uniform_int(order.size() - b);
    std::swap(order[b], order[j]);
    result.ids.push_back(order[b]);
    result.scores.push_back(0.0);
    result.tie_counts.push_back(1);
  }
  return result;
}

SelectionResult select_by_margin(const std::vector<TripletId>& ids,
                                 const std::vector<double>& margins, int batch_size,
                                 bool largest) {
  check_pool(ids.size(), batch_size);
  check_unique(ids);
  if (margins.size() != ids.size()) throw DimensionError("one margin per candidate required");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (margins[a] != margins[b]) return largest ? margins[a] > margins[b] : margins[a] < margins[b];
    return ids[a] < ids[b];
  });
  SelectionResult result;
  for (int b = 0; b < batch_size; ++b) {
    const std::size_t i = order[b];
    result.ids.push_back(ids[i]);
    result.scores.push_back(margins[i]);
    const auto ties = std::count(margins.begin(), margins.end(), margins[i]);
    result.tie_counts.push_back(static_cast<int>(ties));
  }
  return result;
}

SelectionResult select_batch(const SelectionPool& pool, DesignState& state, int batch_size,
                             Selector strategy, RngStream& tie_stream, bool random_ties) {
  switch (strategy) {
    case Selector::ActiveDpo:
    case Selector::FrozenFeature:
      return select_greedy(pool.features, state, batch_size,
                           random_ties ? TieBreak::Random : TieBreak::LowestId, &tie_stream);
    case Selector::Random:
      return select_random(pool.ids, batch_size, tie_stream);
    case Selector::MarginMax:
      return select_by_margin(pool.ids, pool.margins, batch_size, true);
    case Selector::MarginMin:
      return select_by_margin(pool.ids, pool.margins, batch_size, false);
  }
  throw InvalidArgument("unknown selector");
}

double margin_score(const RewardModel& model, const Triplet& triplet) {
  return std::abs(model.reward(triplet.prompt, triplet.response_a) -
                  model.reward(triplet.prompt, triplet.response_b));
}

}  // namespace activedpo
