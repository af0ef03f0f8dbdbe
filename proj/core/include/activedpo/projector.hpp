#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "activedpo/config.hpp"

namespace activedpo {

// Johnson-Lindenstrauss random projection R^ambient -> R^d with i.i.d.
// entries N(0, 1/d) or +-1/sqrt(d). Column j of the matrix is drawn from a
// stream keyed by (seed, ambient, d, j), so the map is reproducible from its
// key alone. The matrix is cached when ambient * d <= cache_limit and
// regenerated column by column otherwise; both paths give bit-identical
// results.
class Projector {
 public:
  static constexpr std::size_t kDefaultCacheLimit = std::size_t{1} << 24;

  Projector(std::uint64_t seed, std::size_t ambient_dim, int proj_dim,
            ProjectionScheme scheme = ProjectionScheme::Gaussian,
            std::size_t cache_limit = kDefaultCacheLimit);

  std::uint64_t seed() const { return seed_; }
  std::size_t ambient_dim() const { return ambient_; }
  int proj_dim() const { return dim_; }
  ProjectionScheme scheme() const { return scheme_; }
  bool materialized() const { return cache_.size() > 0; }

  Eigen::VectorXd project(const Eigen::VectorXd& g) const;

  // Column j of the projection matrix.
  Eigen::VectorXd column(std::size_t j) const;

 private:
  void generate_column(std::size_t j, Eigen::VectorXd& out) const;

  std::uint64_t seed_;
  std::size_t ambient_;
  int dim_;
  ProjectionScheme scheme_;
  Eigen::MatrixXd cache_;
};

}  // namespace activedpo
