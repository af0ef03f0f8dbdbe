#include "activedpo/projector.hpp"

#include <cmath>

#include "activedpo/errors.hpp"
#include "activedpo/rng.hpp"

namespace activedpo {

Projector::Projector(std::uint64_t seed, std::size_t ambient_dim, int proj_dim,
                     ProjectionScheme scheme, std::size_t cache_limit)
    : seed_(seed), ambient_(ambient_dim), dim_(proj_dim), scheme_(scheme) {
  if (proj_dim < 1) throw InvalidArgument("projection dimension must be >= 1");
  if (ambient_dim < 1) throw InvalidArgument("ambient dimension must be >= 1");
  if (ambient_ * static_cast<std::size_t>(dim_) <= cache_limit) {
    cache_.resize(dim_, static_cast<Eigen::Index>(ambient_));
    Eigen::VectorXd col;
    for (std::size_t j = 0; j < ambient_; ++j) {
      generate_column(j, col);
      cache_.col(static_cast<Eigen::Index>(j)) = col;
    }
  }
}

void Projector::generate_column(std::size_t j, Eigen::VectorXd& out) const {
  RngStream stream(seed_, "projection", {ambient_, static_cast<std::uint64_t>(dim_), j});
  out.resize(dim_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (int i = 0; i < dim_; ++i) {
    if (scheme_ == ProjectionScheme::Gaussian) {
      out[i] = scale * stream.normal();
    } else {
      out[i] = (stream() >> 63) != 0 ? scale : -scale;
    }
  }
}

Eigen::VectorXd Projector::column(std::size_t j) const {
  if (j >= ambient_) throw DimensionError("projection column out of range");
  if (materialized()) return cache_.col(static_cast<Eigen::Index>(j));
  Eigen::VectorXd col;
  generate_column(j, col);
  return col;
}

Eigen::VectorXd Projector::project(const Eigen::VectorXd& g) const {
  if (static_cast<std::size_t>(g.size()) != ambient_) {
    throw DimensionError("projector expects dimension " + std::to_string(ambient_) + ", got " +
                         std::to_string(g.size()));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  if (materialized()) {
    for (std::size_t j = 0; j < ambient_; ++j) {
      out += g[static_cast<Eigen::Index>(j)] * cache_.col(static_cast<Eigen::Index>(j));
    }
    return out;
  }
  Eigen::VectorXd col;
  for (std::size_t j = 0; j < ambient_; ++j) {
    generate_column(j, col);
    out += g[static_cast<Eigen::Index>(j)] * col;
  }
  return out;
}

}  // namespace activedpo
