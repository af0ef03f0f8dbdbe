#include <gtest/gtest.h>

#include <cmath>

#include "activedpo/errors.hpp"
#include "activedpo/gradient_feature.hpp"
#include "activedpo/projector.hpp"
#include "test_support.hpp"

namespace activedpo {
namespace {

using Eigen::VectorXd;
using testing::random_unit;
using testing::random_vector;

TEST(Projector, ZeroMapsToZeroAndLinearity) {
  RngStream s(1, "proj-lin");
  const Projector p(5, 300, 16);
  EXPECT_EQ(p.project(VectorXd::Zero(300)), VectorXd::Zero(16));
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd a = random_vector(s, 300), b = random_vector(s, 300);
    EXPECT_LT((p.project(a + b) - p.project(a) - p.project(b)).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Projector, DimensionMismatchIsRejected) {
  const Projector p(5, 30, 4);
  EXPECT_THROW(p.project(VectorXd::Zero(31)), DimensionError);
  EXPECT_THROW(Projector(5, 30, 0), InvalidArgument);
}

TEST(Projector, StreamedAndMaterializedAgreeBitForBit) {
  RngStream s(2, "proj-stream");
  for (auto scheme : {ProjectionScheme::Gaussian, ProjectionScheme::Rademacher}) {
    const Projector cached(9, 500, 32, scheme);
    const Projector streamed(9, 500, 32, scheme, /*cache_limit=*/0);
    ASSERT_TRUE(cached.materialized());
    ASSERT_FALSE(streamed.materialized());
    for (int trial = 0; trial < 5; ++trial) {
      const VectorXd g = random_vector(s, 500);
      EXPECT_EQ(cached.project(g), streamed.project(g));
    }
    EXPECT_EQ(cached.column(17), streamed.column(17));
  }
}

TEST(Projector, RegeneratedFromSeedAndDims) {
  EXPECT_EQ(Projector(4, 100, 8).column(3), Projector(4, 100, 8).column(3));
  EXPECT_NE(Projector(4, 100, 8).column(3), Projector(5, 100, 8).column(3));
}

TEST(Projector, EntryDistributions) {
  const Projector gauss(3, 4000, 50);
  const Projector rad(3, 4000, 50, ProjectionScheme::Rademacher);
  double sum = 0, sum2 = 0;
  for (std::size_t j = 0; j < 4000; ++j) {
    const VectorXd c = gauss.column(j);
    sum += c.sum();
    sum2 += c.squaredNorm();
    const VectorXd r = rad.column(j);
    for (Eigen::Index i = 0; i < r.size(); ++i)
      ASSERT_DOUBLE_EQ(std::abs(r[i]), 1.0 / std::sqrt(50.0));
  }
  const double n = 4000.0 * 50;
  EXPECT_NEAR(sum / n, 0.0, 0.002);
  EXPECT_NEAR(sum2 / n, 1.0 / 50, 0.0005);  // variance 1/d
}

TEST(Projector, PreservesInnerProductsOfUnitPairs) {
  RngStream s(4, "jl");
  const Projector p(11, 10000, 256);
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd a = random_unit(s, 10000), b = random_unit(s, 10000);
    within += std::abs(p.project(a).dot(p.project(b)) - a.dot(b)) <= 0.2;
  }
  EXPECT_GE(within, 95);
}

TEST(Projector, PreservesNormsWithinThreeOverRootD) {
  RngStream s(5, "jl-norm");
  for (int d : {16, 64, 256}) {
    const Projector p(12, 2000, d);
    const double eps = 3.0 / std::sqrt(static_cast<double>(d));
    int within = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const VectorXd g = random_vector(s, 2000, 1.0 + trial);
      const double ratio = p.project(g).norm() / g.norm();
      within += ratio >= 1.0 - eps && ratio <= 1.0 + eps;
    }
    EXPECT_GE(within, 190) << "d = " << d;
  }
}

Triplet dummy(TripletId id) { return Triplet{id, {0}, {0}, {1}, 1}; }

TEST(Featurize, IdenticalGradientsGiveZero) {
  RngStream s(6, "feat");
  const Projector p(1, 40, 8);
  const VectorXd g = random_vector(s, 40);
  for (bool normalize : {false, true}) {
    const auto f = featurize(dummy(1), g, g, p, normalize);
    EXPECT_EQ(f.phi, VectorXd::Zero(8));
    EXPECT_FALSE(f.degenerate);
    EXPECT_EQ(f.normalized, normalize);
  }
}

TEST(Featurize, NormalizationRemovesScale) {
  RngStream s(7, "feat-scale");
  const Projector p(1, 40, 8);
  const VectorXd u = random_unit(s, 40);
  EXPECT_LT(featurize(dummy(1), 10.0 * u, u, p, true).phi.lpNorm<Eigen::Infinity>(), 1e-15);
  const VectorXd raw = featurize(dummy(1), 10.0 * u, u, p, false).phi;
  EXPECT_LT((raw - 9.0 * p.project(u)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Featurize, NormalizedFeaturesAreBoundedAndScaleInvariant) {
  RngStream s(8, "feat-bound");
  const Projector projector(2, 30, 30);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd a = random_vector(s, 30), b = random_vector(s, 30);
    const double c = 0.01 + 100.0 * s.uniform();
    const auto f = featurize(dummy(1), a, b, projector, true);
    const auto scaled = featurize(dummy(1), c * a, b, projector, true);
    EXPECT_LT((f.phi - scaled.phi).lpNorm<Eigen::Infinity>(), 1e-12);
    // The bound of 2 holds exactly before projection and up to the
    // projection's distortion after it.
    EXPECT_LE((a / a.norm() - b / b.norm()).norm(), 2.0 + 1e-12);
  }
}

TEST(Featurize, ZeroGradientIsFlaggedDegenerate) {
  const Projector p(1, 10, 4);
  const auto f = featurize(dummy(3), VectorXd::Zero(10), VectorXd::Ones(10), p, true);
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.phi, VectorXd::Zero(4));
  EXPECT_EQ(f.triplet_id, 3u);
  // Without normalization a zero gradient is an ordinary vector.
  EXPECT_FALSE(featurize(dummy(3), VectorXd::Zero(10), VectorXd::Ones(10), p, false).degenerate);
  EXPECT_THROW(featurize(dummy(3), VectorXd::Zero(10), VectorXd::Ones(9), p, true), DimensionError);
}

TEST(Featurize, DeterministicBitForBit) {
  RngStream s(9, "feat-det");
  const VectorXd a = random_vector(s, 60), b = random_vector(s, 60);
  const auto f1 = featurize(dummy(1), a, b, Projector(3, 60, 8), true);
  const auto f2 = featurize(dummy(1), a, b, Projector(3, 60, 8), true);
  EXPECT_EQ(f1.phi, f2.phi);
}

TEST(Featurize, MaskSlicesParameterRange) {
  VectorXd g(6);
  g << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(apply_mask(g, std::nullopt), g);
  const VectorXd tail = apply_mask(g, std::make_pair<std::size_t, std::size_t>(4, 6));
  ASSERT_EQ(tail.size(), 2);
  EXPECT_EQ(tail[0], 5);
  EXPECT_THROW(apply_mask(g, std::make_pair<std::size_t, std::size_t>(4, 7)), DimensionError);
}

TEST(FeatureCache, RoundTripIsBitExact) {
  testing::TempDir dir("feat");
  RngStream s(10, "cache");
  std::vector<GradientFeature> rows;
  for (TripletId id = 0; id < 7; ++id) {
    GradientFeature f;
    f.triplet_id = id * 3 + 1;
    f.phi = random_vector(s, 5);
    f.normalized = true;
    f.degenerate = id == 4;
    f.model_iteration = 2;
    rows.push_back(f);
  }
  FeatureCacheHeader header{3, 5, true, true, 99};
  write_feature_cache(dir.file("f.bin"), header, rows);
  const auto [h, back] = read_feature_cache(dir.file("f.bin"));
  EXPECT_EQ(h.iteration, 3u);
  EXPECT_EQ(h.dim, 5u);
  EXPECT_TRUE(h.normalized);
  EXPECT_TRUE(h.rademacher);
  EXPECT_EQ(h.projector_seed, 99u);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].triplet_id, rows[i].triplet_id);
    EXPECT_EQ(back[i].phi, rows[i].phi);
    EXPECT_EQ(back[i].degenerate, rows[i].degenerate);
  }
  header.dim = 6;
  EXPECT_THROW(write_feature_cache(dir.file("g.bin"), header, rows), DimensionError);
}

}  // namespace
}  // namespace activedpo
