#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "activedpo/gradient_feature.hpp"

namespace activedpo {

// Regularized design matrix V = (lambda / kappa_mu) I + sum phi phi^T and its
// inverse, maintained by rank-one (Sherman-Morrison) updates.
class DesignState {
 public:
  // Absorbs between inverse-drift checks.
  static constexpr std::size_t kCheckInterval = 64;
  static constexpr double kMaxInverseResidual = 1e-6;

  DesignState(int dim, double lambda, double kappa_mu);

  // V rebuilt from scratch over `features`, inverse by Cholesky.
  static DesignState rebuild(int dim, double lambda, double kappa_mu,
                             const std::vector<Eigen::VectorXd>& features);

  int dim() const { return static_cast<int>(v_.rows()); }
  double lambda() const { return lambda_; }
  double kappa_mu() const { return kappa_mu_; }
  double regularizer() const { return lambda_ / kappa_mu_; }
  std::size_t count() const { return count_; }
  const Eigen::MatrixXd& v() const { return v_; }
  const Eigen::MatrixXd& v_inv() const { return v_inv_; }

  // ||phi||_{V^-1}.
  double uncertainty(const Eigen::VectorXd& phi) const;
  // nu * (lambda / kappa_mu) * ||phi||_{V^-1}: the confidence width used as a
  // diagnostic.
  double width(const Eigen::VectorXd& phi, double nu) const;

  // V += phi phi^T; V^-1 -= (V^-1 phi)(V^-1 phi)^T / (1 + phi^T V^-1 phi).
  void absorb(const Eigen::VectorXd& phi);

  // max |V V^-1 - I|.
  double inverse_residual() const;
  // Recomputes V^-1 from V.
  void refactorize();

  // Restores a state from stored matrices (used on resume).
  static DesignState from_matrices(double lambda, double kappa_mu, Eigen::MatrixXd v,
                                   Eigen::MatrixXd v_inv, std::size_t count);

 private:
  double lambda_;
  double kappa_mu_;
  std::size_t count_ = 0;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd v_inv_;
};

}  // namespace activedpo
