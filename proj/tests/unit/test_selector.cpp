#include <gtest/gtest.h>

#include <Eigen/LU>
#include <set>

#include "activedpo/design_state.hpp"
#include "activedpo/errors.hpp"
#include "activedpo/selection.hpp"
#include "test_support.hpp"

namespace activedpo {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::random_vector;

VectorXd basis(int d, int i) {
  VectorXd e = VectorXd::Zero(d);
  e[i] = 1.0;
  return e;
}

GradientFeature feature(TripletId id, VectorXd phi) {
  GradientFeature f;
  f.triplet_id = id;
  f.phi = std::move(phi);
  return f;
}

// lambda / kappa_mu = 1 gives V = I.
DesignState identity_state(int d) { return DesignState(d, 0.25, 0.25); }

TEST(DesignState, InitializedToScaledIdentity) {
  const DesignState s(3, 1.0, 0.25);
  EXPECT_EQ(s.v(), (4.0 * MatrixXd::Identity(3, 3)).eval());
  EXPECT_EQ(s.v_inv(), (0.25 * MatrixXd::Identity(3, 3)).eval());
  EXPECT_EQ(s.count(), 0u);
  EXPECT_DOUBLE_EQ(s.regularizer(), 4.0);
}

TEST(DesignState, UncertaintyClosedForms) {
  EXPECT_DOUBLE_EQ(identity_state(4).uncertainty(basis(4, 2)), 1.0);
  EXPECT_DOUBLE_EQ(DesignState(4, 1.0, 0.25).uncertainty(basis(4, 1)), 0.5);
  EXPECT_EQ(identity_state(4).uncertainty(VectorXd::Zero(4)), 0.0);
  const DesignState s(4, 1.0, 0.25);
  EXPECT_DOUBLE_EQ(s.width(basis(4, 0), 2.0), 2.0 * 4.0 * 0.5);
}

TEST(DesignState, AbsorbClosedForm) {
  DesignState s = identity_state(2);
  s.absorb(basis(2, 0));
  MatrixXd expected(2, 2);
  expected << 0.5, 0, 0, 1;
  EXPECT_LT((s.v_inv() - expected).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_NEAR(s.uncertainty(basis(2, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.uncertainty(basis(2, 0)), 0.70711, 1e-5);
  EXPECT_EQ(s.count(), 1u);
}

TEST(DesignState, InverseTracksDirectInversion) {
  RngStream rng(1, "absorbs");
  DesignState s(64, 1.0, 0.25);
  MatrixXd v = 4.0 * MatrixXd::Identity(64, 64);
  for (int i = 0; i < 500; ++i) {
    const VectorXd phi = random_vector(rng, 64);
    s.absorb(phi);
    v += phi * phi.transpose();
  }
  EXPECT_LT((s.v() - v).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LT((s.v_inv() - v.inverse()).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE(s.inverse_residual(), 1e-6);
  EXPECT_EQ(s.v_inv(), s.v_inv().transpose());
}

TEST(DesignState, RebuildMatchesSequentialAbsorbs) {
  RngStream rng(2, "rebuild");
  std::vector<VectorXd> phis;
  DesignState seq(6, 0.5, 0.1);
  for (int i = 0; i < 30; ++i) {
    phis.push_back(random_vector(rng, 6));
    seq.absorb(phis.back());
  }
  const DesignState rebuilt = DesignState::rebuild(6, 0.5, 0.1, phis);
  EXPECT_EQ(rebuilt.count(), 30u);
  EXPECT_LT((rebuilt.v() - seq.v()).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LT((rebuilt.v_inv() - seq.v_inv()).lpNorm<Eigen::Infinity>(), 1e-12);
}

// For random histories, absorbing phi strictly shrinks its own uncertainty
// and never grows any probe's.
TEST(DesignState, MonotoneShrinkage) {
  RngStream rng(3, "shrink");
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_int(12));
    DesignState s(d, 0.1 + rng.uniform(), 0.01 + 0.24 * rng.uniform());
    const int history = static_cast<int>(rng.uniform_int(20));
    for (int h = 0; h < history; ++h) s.absorb(random_vector(rng, d));
    const VectorXd phi = random_vector(rng, d);
    std::vector<VectorXd> probes;
    std::vector<double> before;
    for (int p = 0; p < 10; ++p) {
      probes.push_back(random_vector(rng, d, 3.0 * rng.uniform()));
      before.push_back(s.uncertainty(probes.back()));
    }
    const double own_before = s.uncertainty(phi);
    s.absorb(phi);
    EXPECT_LT(s.uncertainty(phi), own_before);
    for (int p = 0; p < 10; ++p) EXPECT_LE(s.uncertainty(probes[p]), before[p] * (1 + 1e-12));
  }
}

TEST(DesignState, ScaleCovariance) {
  RngStream rng(4, "scale");
  DesignState s(5, 1.0, 0.2);
  for (int h = 0; h < 7; ++h) s.absorb(random_vector(rng, 5));
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd phi = random_vector(rng, 5);
    const double c = 10.0 * rng.uniform();
    EXPECT_NEAR(s.uncertainty(c * phi), c * s.uncertainty(phi), 1e-12 * (1 + c));
  }
}

TEST(DesignState, RejectsBadParameters) {
  EXPECT_THROW(DesignState(0, 1.0, 0.25), InvalidArgument);
  EXPECT_THROW(DesignState(3, 0.0, 0.25), InvalidArgument);
  EXPECT_THROW(DesignState(3, 1.0, 0.0), InvalidArgument);
  DesignState s(3, 1.0, 0.25);
  EXPECT_THROW(s.absorb(VectorXd::Zero(4)), DimensionError);
}

TEST(Selection, OrthogonalBasisTiesResolveToLowestIds) {
  std::vector<GradientFeature> pool;
  for (int i = 7; i >= 0; --i) pool.push_back(feature(static_cast<TripletId>(i + 1), basis(8, i)));
  DesignState s = identity_state(8);
  const auto r = select_greedy(pool, s, 3);
  EXPECT_EQ(r.ids, (std::vector<TripletId>{1, 2, 3}));
  EXPECT_EQ(r.tie_counts.front(), 8);
  for (double score : r.scores) EXPECT_DOUBLE_EQ(score, 1.0);
  EXPECT_EQ(s.count(), 3u);
}

TEST(Selection, LargerFeatureFirstThenOrthogonal) {
  std::vector<GradientFeature> pool{feature(10, 2.0 * basis(2, 0)), feature(11, basis(2, 1))};
  DesignState s = identity_state(2);
  const auto r = select_greedy(pool, s, 2);
  EXPECT_EQ(r.ids, (std::vector<TripletId>{10, 11}));
  EXPECT_DOUBLE_EQ(r.scores[0], 2.0);
  EXPECT_DOUBLE_EQ(r.scores[1], 1.0);
}

TEST(Selection, WithinBatchAbsorbDiversifies) {
  // Two copies of one direction and a slightly weaker orthogonal one: without
  // absorbing, both copies would be chosen.
  std::vector<GradientFeature> pool{feature(1, basis(2, 0)), feature(2, basis(2, 0)),
                                    feature(3, 0.9 * basis(2, 1))};
  DesignState s = identity_state(2);
  EXPECT_EQ(select_greedy(pool, s, 2).ids, (std::vector<TripletId>{1, 3}));
}

TEST(Selection, MatchesBruteForceOracle) {
  RngStream rng(5, "brute");
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_int(15));
    const int n = 16 + static_cast<int>(rng.uniform_int(497));
    const int b = 1 + static_cast<int>(rng.uniform_int(16));
    DesignState state(d, 0.2 + rng.uniform(), 0.05 + 0.2 * rng.uniform());
    for (int h = 0; h < static_cast<int>(rng.uniform_int(10)); ++h) state.absorb(random_vector(rng, d));
    const MatrixXd v0 = state.v();
    std::vector<GradientFeature> pool;
    std::vector<TripletId> ids;
    std::vector<VectorXd> phis;
    for (int i = 0; i < n; ++i) {
      ids.push_back(1000 + 3 * static_cast<TripletId>(n - i));  // ids not in pool order
      phis.push_back(random_vector(rng, d));
      // Some exact duplicates exercise the tie rule.
      if (i > 0 && rng.uniform() < 0.05) phis.back() = phis[rng.uniform_int(i)];
      pool.push_back(feature(ids.back(), phis.back()));
    }
    const auto greedy = select_greedy(pool, state, b);
    const auto oracle = testing::brute_force_select(ids, phis, v0, b, kTieTolerance);
    ASSERT_EQ(greedy.ids, oracle.ids) << "trial " << trial;
    for (int k = 0; k < b; ++k) EXPECT_NEAR(greedy.scores[k], oracle.scores[k], 1e-9);
  }
}

TEST(Selection, PoolTooSmallOrDuplicated) {
  DesignState s = identity_state(2);
  std::vector<GradientFeature> pool{feature(1, basis(2, 0))};
  EXPECT_THROW(select_greedy(pool, s, 2), PoolExhausted);
  pool.push_back(feature(1, basis(2, 1)));
  EXPECT_THROW(select_greedy(pool, s, 2), InvalidArgument);
  RngStream rng(6, "x");
  EXPECT_THROW(select_random({1, 2}, 3, rng), PoolExhausted);
  EXPECT_THROW(select_by_margin({1, 2}, {0.1, 0.2}, 3, true), PoolExhausted);
}

TEST(Selection, RandomIsUniformWithoutReplacementAndSeeded) {
  std::vector<TripletId> ids(20);
  for (TripletId i = 0; i < 20; ++i) ids[i] = i;
  std::vector<int> counts(20, 0);
  for (int trial = 0; trial < 4000; ++trial) {
    RngStream rng(7, "select", {static_cast<std::uint64_t>(trial)});
    const auto r = select_random(ids, 5, rng);
    std::set<TripletId> unique(r.ids.begin(), r.ids.end());
    ASSERT_EQ(unique.size(), 5u);
    for (auto id : r.ids) ++counts[id];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 120);
  RngStream a(8, "select"), b(8, "select");
  EXPECT_EQ(select_random(ids, 5, a).ids, select_random(ids, 5, b).ids);
}

TEST(Selection, MarginOrderingAndTies) {
  const std::vector<TripletId> ids{5, 3, 9, 1};
  const std::vector<double> margins{0.5, 1.5, 0.5, 0.0};
  EXPECT_EQ(select_by_margin(ids, margins, 3, true).ids, (std::vector<TripletId>{3, 5, 9}));
  EXPECT_EQ(select_by_margin(ids, margins, 3, false).ids, (std::vector<TripletId>{1, 5, 9}));
  const std::vector<double> zeros(4, 0.0);
  EXPECT_EQ(select_by_margin(ids, zeros, 4, true).ids, (std::vector<TripletId>{1, 3, 5, 9}));
}

TEST(Selection, MarginScoreIsSymmetricAbsoluteDifference) {
  RngStream rng(9, "margin");
  const PolicyModel m = testing::random_policy(rng, testing::small_arch());
  Triplet t{1, {0, 1}, {1, 2, 3}, {3, 3, 0}, 1};
  const double ra = m.reward(t.prompt, t.response_a), rb = m.reward(t.prompt, t.response_b);
  EXPECT_DOUBLE_EQ(margin_score(m, t), std::abs(ra - rb));
  std::swap(t.response_a, t.response_b);
  EXPECT_DOUBLE_EQ(margin_score(m, t), std::abs(ra - rb));
  const PolicyModel at_ref(m.architecture(), m.theta());
  EXPECT_EQ(margin_score(at_ref, t), 0.0);
}

TEST(Selection, RandomTiesUseStream) {
  std::vector<GradientFeature> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(feature(static_cast<TripletId>(i), basis(6, i)));
  std::set<TripletId> firsts;
  for (std::uint64_t k = 0; k < 40; ++k) {
    DesignState s = identity_state(6);
    RngStream tie(1, "ties", {k});
    firsts.insert(select_greedy(pool, s, 1, TieBreak::Random, &tie).ids[0]);
  }
  EXPECT_GT(firsts.size(), 2u);
  DesignState s = identity_state(6);
  EXPECT_THROW(select_greedy(pool, s, 1, TieBreak::Random, nullptr), InvalidArgument);
}

TEST(Selection, DispatchFollowsStrategy) {
  SelectionPool pool;
  pool.ids = {1, 2, 3};
  pool.margins = {0.3, 0.1, 0.2};
  for (TripletId id : pool.ids) pool.features.push_back(feature(id, basis(3, static_cast<int>(id) - 1) * (1.0 + 0.1 * static_cast<double>(id))));
  RngStream tie(1, "t");
  DesignState s = identity_state(3);
  EXPECT_EQ(select_batch(pool, s, 1, Selector::ActiveDpo, tie, false).ids[0], 3u);
  EXPECT_EQ(select_batch(pool, s, 1, Selector::MarginMax, tie, false).ids[0], 1u);
  EXPECT_EQ(select_batch(pool, s, 1, Selector::MarginMin, tie, false).ids[0], 2u);
}

}  // namespace
}  // namespace activedpo
