#include "activedpo/policy_model.hpp"

#include <cmath>

#include "activedpo/errors.hpp"

namespace activedpo {

using Eigen::VectorXd;

namespace {

std::vector<int> layer_sizes(const PolicyArchitecture& arch) {
  std::vector<int> sizes;
  sizes.push_back(3 * arch.vocab_size + arch.response_len);
  sizes.insert(sizes.end(), arch.hidden_widths.begin(), arch.hidden_widths.end());
  sizes.push_back(arch.vocab_size);
  return sizes;
}

double log_sum_exp(const VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

PolicyModel::PolicyModel(PolicyArchitecture arch, VectorXd theta)
    : PolicyModel(arch, theta, theta) {}

PolicyModel::PolicyModel(PolicyArchitecture arch, VectorXd theta, VectorXd theta_ref)
    : arch_(std::move(arch)), net_(layer_sizes(arch_)), theta_(std::move(theta)),
      theta_ref_(std::move(theta_ref)) {
  if (!(arch_.beta > 0.0)) throw InvalidArgument("policy beta must be positive");
  if (static_cast<std::size_t>(theta_.size()) != net_.num_params() ||
      theta_ref_.size() != theta_.size()) {
    throw DimensionError("policy parameter vectors do not match the architecture");
  }
}

PolicyArchitecture PolicyModel::architecture_from(const ModelConfig& model) {
  return {model.vocab_size, model.prompt_len, model.response_len, model.hidden_widths,
          model.beta};
}

PolicyModel PolicyModel::initialize(const RunConfig& config) {
  const PolicyArchitecture arch = architecture_from(config.model);
  const Mlp net(layer_sizes(arch));
  RngStream stream(config.seeds.model_init, "policy-init");
  VectorXd theta;
  net.initialize(theta, stream, config.model.init_scale);
  PolicyModel model(arch, theta);
  if (config.model.sft_steps > 0) {
    sft_warmup(model, config.model.sft_steps, config.model.sft_learning_rate,
               config.seeds.model_init);
  }
  return model;
}

void PolicyModel::set_beta(double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("policy beta must be positive");
  arch_.beta = beta;
}

void PolicyModel::set_params(const VectorXd& params) {
  if (params.size() != theta_.size()) throw DimensionError("policy parameter size mismatch");
  theta_ = params;
}

void PolicyModel::check_lengths(const TokenSeq& prompt, const TokenSeq& response) const {
  if (static_cast<int>(prompt.size()) != arch_.prompt_len) {
    throw DimensionError("prompt length " + std::to_string(prompt.size()) + " != " +
                         std::to_string(arch_.prompt_len));
  }
  if (static_cast<int>(response.size()) != arch_.response_len) {
    throw DimensionError("response length " + std::to_string(response.size()) + " != " +
                         std::to_string(arch_.response_len));
  }
}

void PolicyModel::encode_context(const TokenSeq& prompt, const TokenSeq& response, int position,
                                 VectorXd& input) const {
  const int v = arch_.vocab_size;
  input.setZero(net_.input_dim());
  const double prompt_weight = 1.0 / static_cast<double>(prompt.size());
  for (Token t : prompt) {
    if (t >= static_cast<Token>(v)) throw InvalidArgument("prompt token out of vocabulary");
    input[t] += prompt_weight;
  }
  const double prefix_weight = 1.0 / static_cast<double>(arch_.response_len);
  for (int j = 0; j < position; ++j) {
    const Token t = response[j];
    if (t >= static_cast<Token>(v)) throw InvalidArgument("response token out of vocabulary");
    input[v + t] += prefix_weight;
  }
  const Token previous = position == 0 ? prompt.back() : response[position - 1];
  input[2 * v + previous] = 1.0;
  input[3 * v + position] = 1.0;
}

double PolicyModel::log_prob_at(const VectorXd& params, const TokenSeq& prompt,
                                const TokenSeq& response, VectorXd* grad) const {
  check_lengths(prompt, response);
  if (grad != nullptr) grad->setZero(static_cast<Eigen::Index>(net_.num_params()));
  Mlp::Workspace workspace;
  VectorXd input;
  double total = 0.0;
  for (int j = 0; j < arch_.response_len; ++j) {
    const Token target = response[j];
    if (target >= static_cast<Token>(arch_.vocab_size)) {
      throw InvalidArgument("response token out of vocabulary");
    }
    encode_context(prompt, response, j, input);
    const VectorXd logits = net_.forward(params, input, grad != nullptr ? &workspace : nullptr);
    const double lse = log_sum_exp(logits);
    total += logits[target] - lse;
    if (grad != nullptr) {
      VectorXd d_logits = -(logits.array() - lse).exp().matrix();
      d_logits[target] += 1.0;
      net_.backward(params, workspace, d_logits, *grad);
    }
  }
  return total;
}

VectorXd PolicyModel::next_token_log_probs(const VectorXd& params, const TokenSeq& prompt,
                                           const TokenSeq& prefix) const {
  if (static_cast<int>(prompt.size()) != arch_.prompt_len) {
    throw DimensionError("prompt length mismatch");
  }
  if (static_cast<int>(prefix.size()) >= arch_.response_len) {
    throw DimensionError("prefix already spans the full response");
  }
  VectorXd input;
  encode_context(prompt, prefix, static_cast<int>(prefix.size()), input);
  const VectorXd logits = net_.forward(params, input);
  return logits.array() - log_sum_exp(logits);
}

TokenSeq PolicyModel::sample(const TokenSeq& prompt, RngStream& stream) const {
  TokenSeq response;
  response.reserve(arch_.response_len);
  for (int j = 0; j < arch_.response_len; ++j) {
    const VectorXd log_probs = next_token_log_probs(theta_, prompt, response);
    const double u = stream.uniform();
    double cumulative = 0.0;
    Token choice = static_cast<Token>(arch_.vocab_size - 1);
    for (int k = 0; k < arch_.vocab_size; ++k) {
      cumulative += std::exp(log_probs[k]);
      if (u < cumulative) {
        choice = static_cast<Token>(k);
        break;
      }
    }
    response.push_back(choice);
  }
  return response;
}

std::vector<TokenSeq> PolicyModel::generate(const TokenSeq& prompt, int count,
                                            RngStream& stream) const {
  if (count < 1) throw InvalidArgument("generate count must be >= 1");
  std::vector<TokenSeq> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample(prompt, stream));
  return out;
}

double PolicyModel::reward_at(const VectorXd& params, const TokenSeq& prompt,
                              const TokenSeq& response, VectorXd* grad) const {
  const double current = log_prob_at(params, prompt, response, grad);
  const double reference = log_prob_at(theta_ref_, prompt, response);
  if (grad != nullptr) *grad *= arch_.beta;
  return arch_.beta * (current - reference);
}

std::pair<std::size_t, std::size_t> PolicyModel::output_layer_range() const {
  const int last = net_.num_layers() - 1;
  return {net_.weight_offset(last), net_.layer_end(last)};
}

std::unique_ptr<RewardModel> PolicyModel::clone() const {
  return std::make_unique<PolicyModel>(*this);
}

void sft_warmup(PolicyModel& model, int steps, double learning_rate, std::uint64_t seed) {
  const PolicyArchitecture& arch = model.architecture();
  const int v = arch.vocab_size;

  // Random bigram chain with peaked rows.
  RngStream chain_stream(seed, "sft-chain");
  Eigen::MatrixXd transition(v, v);
  for (int a = 0; a < v; ++a) {
    for (int b = 0; b < v; ++b) transition(a, b) = std::exp(2.0 * chain_stream.normal());
    transition.row(a) /= transition.row(a).sum();
  }
  auto draw = [&](RngStream& s, Token previous) {
    const double u = s.uniform();
    double cumulative = 0.0;
    for (int b = 0; b < v; ++b) {
      cumulative += transition(previous, b);
      if (u < cumulative) return static_cast<Token>(b);
    }
    return static_cast<Token>(v - 1);
  };

  constexpr int kBatch = 16;
  VectorXd theta = model.theta();
  VectorXd grad;
  VectorXd total(theta.size());
  for (int step = 0; step < steps; ++step) {
    RngStream batch_stream(seed, "sft-batch", {static_cast<std::uint64_t>(step)});
    total.setZero();
    for (int i = 0; i < kBatch; ++i) {
      TokenSeq prompt;
      TokenSeq response;
      Token previous = static_cast<Token>(batch_stream.uniform_int(v));
      prompt.push_back(previous);
      while (static_cast<int>(prompt.size()) < arch.prompt_len) {
        previous = draw(batch_stream, previous);
        prompt.push_back(previous);
      }
      while (static_cast<int>(response.size()) < arch.response_len) {
        previous = draw(batch_stream, previous);
        response.push_back(previous);
      }
      model.log_prob_at(theta, prompt, response, &grad);
      total += grad;
    }
    theta += (learning_rate / kBatch) * total;
  }
  model.set_params(theta);
  model.reset_reference();
}

}  // namespace activedpo
