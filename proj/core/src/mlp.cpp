#include "activedpo/mlp.hpp"

#include <cmath>

#include "activedpo/errors.hpp"

namespace activedpo {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw InvalidArgument("Mlp needs at least an input and an output size");
  for (int s : sizes_) {
    if (s < 1) throw InvalidArgument("Mlp layer sizes must be positive");
  }
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
}

VectorXd Mlp::forward(const VectorXd& params, const VectorXd& input, Workspace* workspace) const {
  if (static_cast<std::size_t>(params.size()) != num_params_) {
    throw DimensionError("Mlp parameter vector has wrong size");
  }
  if (input.size() != input_dim()) throw DimensionError("Mlp input has wrong size");
  if (workspace != nullptr) {
    workspace->activations.resize(sizes_.size());
    workspace->activations[0] = input;
  }
  VectorXd a = input;
  for (int l = 0; l < num_layers(); ++l) {
    Map<const MatrixXd> w(params.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Map<const VectorXd> b(params.data() + bias_offset(l), sizes_[l + 1]);
    VectorXd z = w * a + b;
    if (l + 1 < num_layers()) z = z.array().tanh();
    a = std::move(z);
    if (workspace != nullptr) workspace->activations[l + 1] = a;
  }
  return a;
}

void Mlp::backward(const VectorXd& params, const Workspace& workspace, const VectorXd& d_output,
                   VectorXd& grad) const {
  if (static_cast<std::size_t>(grad.size()) != num_params_) {
    throw DimensionError("Mlp gradient vector has wrong size");
  }
  VectorXd delta = d_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const VectorXd& a_in = workspace.activations[l];
    Map<MatrixXd> gw(grad.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Map<VectorXd> gb(grad.data() + bias_offset(l), sizes_[l + 1]);
    gw.noalias() += delta * a_in.transpose();
    gb += delta;
    if (l == 0) break;
    Map<const MatrixXd> w(params.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    VectorXd back = w.transpose() * delta;
    delta = back.array() * (1.0 - a_in.array().square());
  }
}

void Mlp::initialize(VectorXd& params, RngStream& stream, double scale) const {
  params = VectorXd::Zero(static_cast<Eigen::Index>(num_params_));
  for (int l = 0; l < num_layers(); ++l) {
    const double std_dev = scale / std::sqrt(static_cast<double>(sizes_[l]));
    for (std::size_t i = weight_offset(l); i < bias_offset(l); ++i) {
      params[static_cast<Eigen::Index>(i)] = std_dev * stream.normal();
    }
  }
}

}  // namespace activedpo
