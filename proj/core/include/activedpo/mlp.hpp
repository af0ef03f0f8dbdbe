#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "activedpo/rng.hpp"

namespace activedpo {

// Fully connected network with tanh hidden activations and a linear output
// layer, evaluated against an external flat parameter vector. Layer l stores
// its weight matrix (column-major, out x in) followed by its bias.
class Mlp {
 public:
  // Cached activations of one forward pass; activations[0] is the input.
  struct Workspace {
    std::vector<Eigen::VectorXd> activations;
  };

  explicit Mlp(std::vector<int> layer_sizes);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t num_params() const { return num_params_; }

  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer + 1]) * sizes_[layer];
  }
  std::size_t layer_end(int layer) const { return bias_offset(layer) + sizes_[layer + 1]; }

  Eigen::VectorXd forward(const Eigen::VectorXd& params, const Eigen::VectorXd& input,
                          Workspace* workspace = nullptr) const;

  // Accumulates d(output . d_output)/d(params) into grad, using the
  // activations cached by the matching forward call.
  void backward(const Eigen::VectorXd& params, const Workspace& workspace,
                const Eigen::VectorXd& d_output, Eigen::VectorXd& grad) const;

  // Weights ~ N(0, scale^2 / fan_in), biases zero.
  void initialize(Eigen::VectorXd& params, RngStream& stream, double scale) const;

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

}  // namespace activedpo
