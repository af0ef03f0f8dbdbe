#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace activedpo {

enum class Selector { ActiveDpo, Random, MarginMax, MarginMin, FrozenFeature };
enum class TrainerKind { Dpo, DpoRegularized };
enum class RewardMode { Implicit, Direct };
enum class GroundTruthKind { Linear, Mlp2, LengthBias };
enum class ProjectionScheme { Gaussian, Rademacher };
enum class PromptSourceMode { Synthetic, Imported };
enum class FeatureParams { All, OutputLayer };

std::string_view to_string(Selector value);
std::string_view to_string(TrainerKind value);
std::string_view to_string(RewardMode value);
std::string_view to_string(GroundTruthKind value);
std::string_view to_string(ProjectionScheme value);
std::string_view to_string(PromptSourceMode value);
std::string_view to_string(FeatureParams value);

Selector parse_selector(std::string_view text);

struct ModelConfig {
  int vocab_size = 12;
  int prompt_len = 4;
  int response_len = 6;
  std::vector<int> hidden_widths = {32, 32};
  double init_scale = 1.0;
  double beta = 0.5;
  RewardMode reward_mode = RewardMode::Implicit;
  int direct_width = 32;
  int direct_depth = 2;
  bool mirrored_input = true;
  int sft_steps = 0;
  double sft_learning_rate = 0.1;
};

struct DataConfig {
  // n_x: prompts drawn per iteration.
  int prompts_per_iteration = 100;
  // Responses sampled per prompt; each prompt yields C(m_pairs, 2) triplets.
  int m_pairs = 3;
  int prompt_pool_size = 1000;
  PromptSourceMode prompt_source = PromptSourceMode::Synthetic;
  std::string prompt_file;
  int eval_prompts = 100;
  int eval_samples_per_prompt = 4;
};

struct OracleConfig {
  GroundTruthKind reward_kind = GroundTruthKind::Mlp2;
  int hidden = 16;
  double gain = 3.0;
  double length_bias_coef = 0.5;
  std::string imported_scores_file;
};

struct SelectionConfig {
  Selector selector = Selector::ActiveDpo;
  int iterations = 8;
  int batch_size = 25;
  // Total label budget k; 0 means "derive as iterations * batch_size".
  int budget = 0;
  double lambda = 1.0;
  double kappa_mu = 0.25;
  double nu = 1.0;
  int proj_dim = 64;
  ProjectionScheme projection = ProjectionScheme::Gaussian;
  bool normalize_gradients = true;
  bool refresh_features = true;
  bool random_ties = false;
  FeatureParams feature_params = FeatureParams::All;
};

struct TrainingConfig {
  TrainerKind trainer = TrainerKind::Dpo;
  double reg_lambda = 0.0;
  double learning_rate = 0.5;
  double lr_decay = 1.0;
  double momentum = 0.0;
  int epochs_per_iteration = 4;
  int minibatch_size = 16;
  bool cumulative = true;
};

struct SeedConfig {
  std::uint64_t model_init = 1;
  std::uint64_t generation = 1;
  std::uint64_t oracle = 1;
  std::uint64_t projection = 1;
  std::uint64_t selection = 1;
};

struct RuntimeConfig {
  int threads = 1;
};

struct RunConfig {
  ModelConfig model;
  DataConfig data;
  OracleConfig oracle;
  SelectionConfig selection;
  TrainingConfig training;
  SeedConfig seeds;
  RuntimeConfig runtime;

  int budget() const { return selection.iterations * selection.batch_size; }
  int policy_context_window() const { return model.prompt_len + model.response_len - 1; }

  // Throws ConfigError on any violated constraint.
  void validate() const;

  // Sets all five seed streams to `seed`.
  RunConfig with_seed(std::uint64_t seed) const;

  friend bool operator==(const RunConfig&, const RunConfig&);
};

// Nested JSON object with sections model/data/oracle/selection/training/
// seeds/runtime. Unknown sections or keys are a ConfigError.
nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& json);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

// Overrides one key, named "section.key" or by a leaf name unique across
// sections. The text is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config_json, std::string_view key, std::string_view text);

// (section, key) pairs of every configuration entry, in document order.
std::vector<std::pair<std::string, std::string>> config_keys();

// FNV-1a hash of the canonical JSON rendering, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace activedpo
