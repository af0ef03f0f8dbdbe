#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "activedpo/projector.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

// phi = P g_a_hat - P g_b_hat for one triplet, where g_hat = g / ||g|| when
// normalization is on.
struct GradientFeature {
  TripletId triplet_id = 0;
  Eigen::VectorXd phi;
  bool normalized = false;
  // Set when normalization met a zero-norm gradient; phi is then zero.
  bool degenerate = false;
  // Iteration whose parameters produced the gradients (t - 1 when scoring
  // the pool of iteration t).
  int model_iteration = 0;
};

// One response's contribution: the projected (optionally normalized) gradient.
struct ProjectedGradient {
  Eigen::VectorXd value;
  bool degenerate = false;
};

ProjectedGradient project_gradient(const Eigen::VectorXd& grad, const Projector& projector,
                                   bool normalize);

GradientFeature combine(TripletId triplet_id, const ProjectedGradient& a,
                        const ProjectedGradient& b, bool normalized, int model_iteration);

GradientFeature featurize(const Triplet& triplet, const Eigen::VectorXd& grad_a,
                          const Eigen::VectorXd& grad_b, const Projector& projector,
                          bool normalize, int model_iteration = 0);

// Restricts a full gradient to a contiguous parameter block (stands in for
// adapter-only gradients). An empty optional keeps every coordinate.
using ParamRange = std::optional<std::pair<std::size_t, std::size_t>>;
Eigen::VectorXd apply_mask(const Eigen::VectorXd& grad, const ParamRange& range);

// Per-iteration feature cache file, used to resume runs and by `inspect`.
//
//   "ADPOFEAT"   magic
//   u32 version  (1)
//   u32 iteration
//   u32 d
//   u32 flags    bit 0: normalized, bit 1: rademacher projection
//   u64 projector seed
//   u64 rows
//   rows x u64   triplet ids
//   rows x u8    degenerate flags
//   rows x d     f64, row-major
struct FeatureCacheHeader {
  std::uint32_t iteration = 0;
  std::uint32_t dim = 0;
  bool normalized = false;
  bool rademacher = false;
  std::uint64_t projector_seed = 0;
};

void write_feature_cache(const std::string& path, const FeatureCacheHeader& header,
                         const std::vector<GradientFeature>& features);
std::pair<FeatureCacheHeader, std::vector<GradientFeature>> read_feature_cache(
    const std::string& path);

}  // namespace activedpo
