#include "activedpo/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "activedpo/errors.hpp"
#include "activedpo/io.hpp"
#include "activedpo/pair_encoding.hpp"
#include "activedpo/parallel.hpp"
#include "activedpo/trainer.hpp"

namespace activedpo {

GroundTruthReward GroundTruthReward::from_config(const RunConfig& config) {
  GroundTruthReward gt;
  gt.kind_ = config.oracle.reward_kind;
  gt.vocab_size_ = config.model.vocab_size;
  gt.gain_ = config.oracle.gain;
  gt.length_bias_coef_ = config.oracle.length_bias_coef;
  const int dim = encoded_pair_dim(gt.vocab_size_, false);
  RngStream stream(config.seeds.oracle, "gt-weights");
  if (gt.kind_ == GroundTruthKind::Linear) {
    gt.linear_.resize(dim);
    for (int i = 0; i < dim; ++i) gt.linear_[i] = stream.normal();
    return gt;
  }
  const int hidden = config.oracle.hidden;
  gt.w1_.resize(hidden, dim);
  gt.b1_.resize(hidden);
  gt.w2_.resize(hidden);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < hidden; ++r) gt.w1_(r, c) = stream.normal();
  for (int r = 0; r < hidden; ++r) gt.b1_[r] = 0.5 * stream.normal();
  for (int r = 0; r < hidden; ++r) gt.w2_[r] = stream.normal() * std::sqrt(2.0 / hidden);
  gt.b2_ = 0.0;
  return gt;
}

GroundTruthReward GroundTruthReward::linear(int vocab_size, Eigen::VectorXd weights) {
  if (weights.size() != encoded_pair_dim(vocab_size, false))
    throw DimensionError("linear ground truth expects " +
                         std::to_string(encoded_pair_dim(vocab_size, false)) + " weights");
  GroundTruthReward gt;
  gt.kind_ = GroundTruthKind::Linear;
  gt.vocab_size_ = vocab_size;
  gt.gain_ = 1.0;
  gt.linear_ = std::move(weights);
  return gt;
}

double GroundTruthReward::raw(const TokenSeq& prompt, const TokenSeq& response) const {
  const Eigen::VectorXd z = encode_pair(prompt, response, vocab_size_, false);
  if (kind_ == GroundTruthKind::Linear) return gain_ * linear_.dot(z);
  const Eigen::VectorXd h = (gain_ * (w1_ * z) + b1_).array().tanh().matrix();
  double value = w2_.dot(h) + b2_;
  if (kind_ == GroundTruthKind::LengthBias && !response.empty()) {
    std::unordered_set<Token> distinct(response.begin(), response.end());
    value += length_bias_coef_ * static_cast<double>(distinct.size()) /
             static_cast<double>(response.size());
  }
  return value;
}

double GroundTruthReward::operator()(const TokenSeq& prompt, const TokenSeq& response) const {
  return std::clamp(raw(prompt, response), -1.0, 1.0);
}

double true_reward(const GroundTruthReward& gt, const TokenSeq& prompt, const TokenSeq& response) {
  return gt(prompt, response);
}

double btl_probability(const GroundTruthReward& gt, const Triplet& triplet) {
  return sigmoid(gt(triplet.prompt, triplet.response_a) - gt(triplet.prompt, triplet.response_b));
}

namespace {

PreferenceRecord draw_label(TripletId id, double p_a, RngStream& stream, int iteration) {
  PreferenceRecord record;
  record.triplet_id = id;
  record.winner = stream.uniform() < p_a ? Side::A : Side::B;
  record.source = LabelSource::Simulated;
  record.labeled_at_iteration = iteration;
  return record;
}

}  // namespace

PreferenceRecord btl_label(const GroundTruthReward& gt, const Triplet& triplet, RngStream& stream,
                           int iteration) {
  return draw_label(triplet.id, btl_probability(gt, triplet), stream, iteration);
}

PreferenceRecord BtlOracle::label(const Triplet& triplet, int iteration) const {
  RngStream stream(seed_, "oracle",
                   {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(triplet.id)});
  return btl_label(gt_, triplet, stream, iteration);
}

ImportedScoreOracle ImportedScoreOracle::load(const std::string& path, std::uint64_t seed) {
  std::unordered_map<std::uint64_t, double> scores;
  const auto rows = read_jsonl(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + ":" + std::to_string(i + 1);
    if (!row.is_object() || !row.contains("triplet") || !row.contains("score") ||
        !row["triplet"].is_string() || !row["score"].is_number())
      throw FormatError(where + ": expected {\"triplet\": <hex>, \"score\": <number>}");
    const std::string hash = row["triplet"].get<std::string>();
    std::size_t used = 0;
    std::uint64_t key = 0;
    try {
      key = std::stoull(hash, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != hash.size() || hash.empty())
      throw FormatError(where + ": triplet hash is not hexadecimal");
    scores[key] = row["score"].get<double>();
  }
  return ImportedScoreOracle(std::move(scores), seed);
}

PreferenceRecord ImportedScoreOracle::label(const Triplet& triplet, int iteration) const {
  const auto it = scores_.find(content_hash(triplet));
  if (it == scores_.end())
    throw InvalidArgument("no imported score for triplet " + std::to_string(triplet.id) +
                          " (hash " + hex64(content_hash(triplet)) + ")");
  RngStream stream(seed_, "oracle",
                   {static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(triplet.id)});
  return draw_label(triplet.id, sigmoid(it->second), stream, iteration);
}

std::unique_ptr<PreferenceOracle> make_oracle(const RunConfig& config) {
  if (!config.oracle.imported_scores_file.empty())
    return std::make_unique<ImportedScoreOracle>(
        ImportedScoreOracle::load(config.oracle.imported_scores_file, config.seeds.oracle));
  return std::make_unique<BtlOracle>(GroundTruthReward::from_config(config), config.seeds.oracle);
}

std::vector<TokenSeq> synthetic_prompts(int count, int vocab_size, int length, RngStream& stream) {
  std::vector<TokenSeq> prompts(count, TokenSeq(length));
  for (auto& prompt : prompts)
    for (auto& token : prompt) token = static_cast<Token>(stream.uniform_int(vocab_size));
  return prompts;
}

std::vector<TokenSeq> load_prompts(const std::string& path, int vocab_size, int length) {
  std::vector<TokenSeq> prompts;
  const auto rows = read_jsonl(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + ":" + std::to_string(i + 1);
    if (!row.is_array()) throw FormatError(where + ": expected a JSON array of token ids");
    if (static_cast<int>(row.size()) != length)
      throw FormatError(where + ": prompt has " + std::to_string(row.size()) +
                        " tokens, expected " + std::to_string(length));
    TokenSeq prompt;
    prompt.reserve(length);
    for (const auto& token : row) {
      if (!token.is_number_integer() || token.get<long long>() < 0 ||
          token.get<long long>() >= vocab_size)
        throw FormatError(where + ": token " + token.dump() + " outside vocabulary [0, " +
                          std::to_string(vocab_size) + ")");
      prompt.push_back(static_cast<Token>(token.get<long long>()));
    }
    prompts.push_back(std::move(prompt));
  }
  if (prompts.empty()) throw FormatError(path + ": no prompts");
  return prompts;
}

PromptSets make_prompt_sets(const RunConfig& config) {
  const auto& m = config.model;
  const auto& d = config.data;
  PromptSets sets;
  if (d.prompt_source == PromptSourceMode::Synthetic) {
    RngStream train_stream(config.seeds.generation, "dataset");
    RngStream eval_stream(config.seeds.generation, "eval-prompts");
    sets.train = synthetic_prompts(d.prompt_pool_size, m.vocab_size, m.prompt_len, train_stream);
    sets.eval = synthetic_prompts(d.eval_prompts, m.vocab_size, m.prompt_len, eval_stream);
    return sets;
  }
  // Imported: a seeded shuffle holds out the evaluation prompts.
  auto all = load_prompts(d.prompt_file, m.vocab_size, m.prompt_len);
  if (static_cast<int>(all.size()) <= d.eval_prompts)
    throw ConfigError("prompt file has " + std::to_string(all.size()) +
                      " prompts; need more than eval_prompts = " + std::to_string(d.eval_prompts));
  RngStream split(config.seeds.generation, "eval-split");
  std::shuffle(all.begin(), all.end(), split);
  sets.eval.assign(all.begin(), all.begin() + d.eval_prompts);
  sets.train.assign(all.begin() + d.eval_prompts, all.end());
  return sets;
}

std::vector<TokenSeq> prompts_for_iteration(const std::vector<TokenSeq>& dataset, int count,
                                            std::uint64_t seed, int iteration) {
  if (count > static_cast<int>(dataset.size()))
    throw PoolExhausted("requested " + std::to_string(count) + " prompts from a dataset of " +
                        std::to_string(dataset.size()));
  RngStream stream(seed, "prompt-pick", {static_cast<std::uint64_t>(iteration)});
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < count; ++i) {
    const std::size_t j = i + stream.uniform_int(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<TokenSeq> picked;
  picked.reserve(count);
  for (int i = 0; i < count; ++i) picked.push_back(dataset[order[i]]);
  return picked;
}

CandidatePool build_pool(const PolicyModel& model, const std::vector<TokenSeq>& prompts,
                         int m_pairs, const RngStream& stream, TripletId first_id, int iteration,
                         int threads) {
  if (m_pairs < 2) throw InvalidArgument("m_pairs must be at least 2");
  CandidatePool pool;
  pool.responses.resize(prompts.size());
  parallel_for(prompts.size(), threads, [&](std::size_t i) {
    RngStream sub = stream.child(i);
    pool.responses[i] = model.generate(prompts[i], m_pairs, sub);
  });
  TripletId next = first_id;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& responses = pool.responses[i];
    for (int a = 0; a < m_pairs; ++a) {
      for (int b = a + 1; b < m_pairs; ++b) {
        if (responses[a] == responses[b]) {
          ++pool.dropped;
          continue;
        }
        pool.triplets.push_back(Triplet{next++, prompts[i], responses[a], responses[b], iteration});
        pool.sources.push_back({static_cast<int>(i), a, b});
      }
    }
  }
  return pool;
}

EvalResult evaluate(const ResponseGenerator& trained, const ResponseGenerator& initial,
                    const GroundTruthReward& gt, const std::vector<TokenSeq>& prompts,
                    int samples_per_prompt, std::uint64_t seed) {
  if (prompts.empty() || samples_per_prompt <= 0)
    throw InvalidArgument("evaluation needs at least one prompt and one sample");
  const std::size_t slots = prompts.size() * samples_per_prompt;
  std::vector<double> rewards(slots), wins(slots);
  for (std::size_t slot = 0; slot < slots; ++slot) {
    const std::size_t p = slot / samples_per_prompt;
    const std::uint64_t s = slot % samples_per_prompt;
    RngStream trained_stream(seed, "eval", {p, s});
    RngStream initial_stream(seed, "eval", {p, s});
    const TokenSeq y = trained(prompts[p], trained_stream);
    const TokenSeq y0 = initial(prompts[p], initial_stream);
    const double r = gt(prompts[p], y);
    const double r0 = gt(prompts[p], y0);
    rewards[slot] = r;
    wins[slot] = r > r0 ? 1.0 : (r == r0 ? 0.5 : 0.0);
  }
  EvalResult result;
  result.mean_true_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / slots;
  result.win_rate = std::accumulate(wins.begin(), wins.end(), 0.0) / slots;
  return result;
}

EvalResult evaluate(const PolicyModel& trained, const PolicyModel& initial,
                    const GroundTruthReward& gt, const std::vector<TokenSeq>& prompts,
                    int samples_per_prompt, std::uint64_t seed) {
  return evaluate([&](const TokenSeq& x, RngStream& s) { return trained.sample(x, s); },
                  [&](const TokenSeq& x, RngStream& s) { return initial.sample(x, s); }, gt,
                  prompts, samples_per_prompt, seed);
}

}  // namespace activedpo
