#include "activedpo/direct_reward.hpp"

#include <cmath>

#include "activedpo/errors.hpp"
#include "activedpo/pair_encoding.hpp"

namespace activedpo {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<int> layer_sizes(const DirectRewardArchitecture& arch) {
  std::vector<int> sizes{encoded_pair_dim(arch.vocab_size, arch.mirrored_input)};
  for (int l = 0; l < arch.depth; ++l) sizes.push_back(arch.width);
  sizes.push_back(1);
  return sizes;
}

}  // namespace

DirectRewardNet::DirectRewardNet(DirectRewardArchitecture arch, VectorXd theta)
    : DirectRewardNet(arch, theta, theta) {}

DirectRewardNet::DirectRewardNet(DirectRewardArchitecture arch, VectorXd theta, VectorXd theta0)
    : arch_(arch), net_(layer_sizes(arch_)), theta_(std::move(theta)), theta0_(std::move(theta0)) {
  if (static_cast<std::size_t>(theta_.size()) != net_.num_params() ||
      theta0_.size() != theta_.size()) {
    throw DimensionError("reward network parameters do not match the architecture");
  }
}

DirectRewardArchitecture DirectRewardNet::architecture_from(const ModelConfig& model) {
  return {model.vocab_size, model.direct_width, model.direct_depth, model.mirrored_input};
}

DirectRewardNet DirectRewardNet::initialize(const RunConfig& config) {
  const DirectRewardArchitecture arch = architecture_from(config.model);
  const Mlp net(layer_sizes(arch));
  RngStream stream(config.seeds.model_init, "direct-reward-init");
  VectorXd theta = VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  const double scale = config.model.init_scale;

  if (!arch.mirrored_input) {
    net.initialize(theta, stream, scale);
    return DirectRewardNet(arch, theta);
  }

  // Block-diagonal copies of a half-width network; the output layer reads
  // the first copy with +w and the second with -w.
  for (int l = 0; l < net.num_layers(); ++l) {
    const int rows = net.layer_sizes()[l + 1];
    const int cols = net.layer_sizes()[l];
    Map<MatrixXd> w(theta.data() + net.weight_offset(l), rows, cols);
    const int half_cols = cols / 2;
    const double std_dev = scale / std::sqrt(static_cast<double>(half_cols));
    if (l + 1 < net.num_layers()) {
      const int half_rows = rows / 2;
      for (int c = 0; c < half_cols; ++c) {
        for (int r = 0; r < half_rows; ++r) {
          const double value = std_dev * stream.normal();
          w(r, c) = value;
          w(half_rows + r, half_cols + c) = value;
        }
      }
    } else {
      for (int c = 0; c < half_cols; ++c) {
        const double value = std_dev * stream.normal();
        w(0, c) = value;
        w(0, half_cols + c) = -value;
      }
    }
  }
  return DirectRewardNet(arch, theta);
}

void DirectRewardNet::set_params(const VectorXd& params) {
  if (params.size() != theta_.size()) throw DimensionError("reward network parameter mismatch");
  theta_ = params;
}

double DirectRewardNet::output_at(const VectorXd& params, const VectorXd& z,
                                  VectorXd* grad) const {
  Mlp::Workspace workspace;
  const VectorXd out = net_.forward(params, z, grad != nullptr ? &workspace : nullptr);
  if (grad != nullptr) {
    grad->setZero(static_cast<Eigen::Index>(net_.num_params()));
    net_.backward(params, workspace, VectorXd::Ones(1), *grad);
  }
  return out[0];
}

double DirectRewardNet::reward_at(const VectorXd& params, const TokenSeq& prompt,
                                  const TokenSeq& response, VectorXd* grad) const {
  return output_at(params, encode_pair(prompt, response, arch_.vocab_size, arch_.mirrored_input),
                   grad);
}

std::pair<std::size_t, std::size_t> DirectRewardNet::output_layer_range() const {
  const int last = net_.num_layers() - 1;
  return {net_.weight_offset(last), net_.layer_end(last)};
}

std::unique_ptr<RewardModel> DirectRewardNet::clone() const {
  return std::make_unique<DirectRewardNet>(*this);
}

}  // namespace activedpo
