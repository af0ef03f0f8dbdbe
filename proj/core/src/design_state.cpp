#include "activedpo/design_state.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "activedpo/errors.hpp"

namespace activedpo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DesignState::DesignState(int dim, double lambda, double kappa_mu)
    : lambda_(lambda), kappa_mu_(kappa_mu) {
  if (dim < 1) throw InvalidArgument("design dimension must be >= 1");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(kappa_mu > 0.0 && kappa_mu <= 0.25)) throw InvalidArgument("kappa_mu must lie in (0, 0.25]");
  v_ = regularizer() * MatrixXd::Identity(dim, dim);
  v_inv_ = (1.0 / regularizer()) * MatrixXd::Identity(dim, dim);
}

DesignState DesignState::rebuild(int dim, double lambda, double kappa_mu,
                                 const std::vector<VectorXd>& features) {
  DesignState state(dim, lambda, kappa_mu);
  for (const auto& phi : features) {
    if (phi.size() != dim) throw DimensionError("feature dimension does not match design state");
    state.v_.noalias() += phi * phi.transpose();
  }
  state.count_ = features.size();
  state.refactorize();
  return state;
}

DesignState DesignState::from_matrices(double lambda, double kappa_mu, MatrixXd v,
                                       MatrixXd v_inv, std::size_t count) {
  DesignState state(static_cast<int>(v.rows()), lambda, kappa_mu);
  if (v.rows() != v.cols() || v_inv.rows() != v.rows() || v_inv.cols() != v.cols()) {
    throw DimensionError("design matrices must be square and equally sized");
  }
  state.v_ = std::move(v);
  state.v_inv_ = std::move(v_inv);
  state.count_ = count;
  return state;
}

double DesignState::uncertainty(const VectorXd& phi) const {
  if (phi.size() != v_.rows()) throw DimensionError("feature dimension does not match design state");
  const double quad = phi.dot(v_inv_ * phi);
  return std::sqrt(std::max(quad, 0.0));
}

double DesignState::width(const VectorXd& phi, double nu) const {
  return nu * regularizer() * uncertainty(phi);
}

void DesignState::absorb(const VectorXd& phi) {
  if (phi.size() != v_.rows()) throw DimensionError("feature dimension does not match design state");
  const VectorXd u = v_inv_ * phi;
  const double denom = 1.0 + phi.dot(u);
  // Splitting the denominator across both factors keeps V^-1 exactly symmetric.
  const VectorXd w = u / std::sqrt(denom);
  v_.noalias() += phi * phi.transpose();
  v_inv_.noalias() -= w * w.transpose();
  ++count_;
  if (count_ % kCheckInterval == 0 && inverse_residual() > kMaxInverseResidual) refactorize();
}

double DesignState::inverse_residual() const {
  return (v_ * v_inv_ - MatrixXd::Identity(v_.rows(), v_.cols())).cwiseAbs().maxCoeff();
}

void DesignState::refactorize() {
  Eigen::LLT<MatrixXd> llt(v_);
  if (llt.info() != Eigen::Success) throw InvalidArgument("design matrix is not positive definite");
  v_inv_ = llt.solve(MatrixXd::Identity(v_.rows(), v_.cols()));
  v_inv_ = 0.5 * (v_inv_ + v_inv_.transpose()).eval();
}

}  // namespace activedpo
