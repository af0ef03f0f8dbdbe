#include "activedpo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "activedpo/errors.hpp"
#include "activedpo/rng.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
struct EnumTable {
  std::pair<Enum, std::string_view> entries[N];

  std::string_view name(Enum value) const {
    for (const auto& [e, n] : entries) {
      if (e == value) return n;
    }
    return "?";
  }

  Enum parse(std::string_view text, std::string_view what) const {
    for (const auto& [e, n] : entries) {
      if (n == text) return e;
    }
    std::string allowed;
    for (const auto& [e, n] : entries) {
      if (!allowed.empty()) allowed += ", ";
      allowed += n;
    }
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) +
                      "' (expected one of: " + allowed + ")");
  }
};

constexpr EnumTable<Selector, 5> kSelectors{{{Selector::ActiveDpo, "active_dpo"},
                                             {Selector::Random, "random"},
                                             {Selector::MarginMax, "margin_max"},
                                             {Selector::MarginMin, "margin_min"},
                                             {Selector::FrozenFeature, "frozen_feature"}}};
constexpr EnumTable<TrainerKind, 2> kTrainers{
    {{TrainerKind::Dpo, "dpo"}, {TrainerKind::DpoRegularized, "dpo_regularized"}}};
constexpr EnumTable<RewardMode, 2> kRewardModes{
    {{RewardMode::Implicit, "implicit"}, {RewardMode::Direct, "direct"}}};
constexpr EnumTable<GroundTruthKind, 3> kGroundTruths{{{GroundTruthKind::Linear, "linear"},
                                                       {GroundTruthKind::Mlp2, "mlp2"},
                                                       {GroundTruthKind::LengthBias, "length_bias"}}};
constexpr EnumTable<ProjectionScheme, 2> kProjections{
    {{ProjectionScheme::Gaussian, "gaussian"}, {ProjectionScheme::Rademacher, "rademacher"}}};
constexpr EnumTable<PromptSourceMode, 2> kPromptSources{
    {{PromptSourceMode::Synthetic, "synthetic"}, {PromptSourceMode::Imported, "imported"}}};
constexpr EnumTable<FeatureParams, 2> kFeatureParams{
    {{FeatureParams::All, "all"}, {FeatureParams::OutputLayer, "output_layer"}}};

// Reads keys out of one section and rejects leftovers.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    section_ = &root.at(name_);
    if (!section_->is_object()) throw ConfigError("section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    consumed_.insert(key);
    if (section_ == nullptr || !section_->contains(key)) return;
    try {
      out = section_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  template <typename Enum, std::size_t N>
  void read_enum(const char* key, Enum& out, const EnumTable<Enum, N>& table) {
    std::string text(table.name(out));
    read(key, text);
    out = table.parse(text, name_ + "." + key);
  }

  void finish() const {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : section_->items()) {
      if (!consumed_.contains(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* section_ = nullptr;
  std::set<std::string> consumed_;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace

std::string_view to_string(Selector value) { return kSelectors.name(value); }
std::string_view to_string(TrainerKind value) { return kTrainers.name(value); }
std::string_view to_string(RewardMode value) { return kRewardModes.name(value); }
std::string_view to_string(GroundTruthKind value) { return kGroundTruths.name(value); }
std::string_view to_string(ProjectionScheme value) { return kProjections.name(value); }
std::string_view to_string(PromptSourceMode value) { return kPromptSources.name(value); }
std::string_view to_string(FeatureParams value) { return kFeatureParams.name(value); }

Selector parse_selector(std::string_view text) { return kSelectors.parse(text, "selector"); }

json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"vocab_size", c.model.vocab_size},
                {"prompt_len", c.model.prompt_len},
                {"response_len", c.model.response_len},
                {"hidden_widths", c.model.hidden_widths},
                {"init_scale", c.model.init_scale},
                {"beta", c.model.beta},
                {"reward_mode", to_string(c.model.reward_mode)},
                {"direct_width", c.model.direct_width},
                {"direct_depth", c.model.direct_depth},
                {"mirrored_input", c.model.mirrored_input},
                {"sft_steps", c.model.sft_steps},
                {"sft_learning_rate", c.model.sft_learning_rate}};
  j["data"] = {{"prompts_per_iteration", c.data.prompts_per_iteration},
               {"m_pairs", c.data.m_pairs},
               {"prompt_pool_size", c.data.prompt_pool_size},
               {"prompt_source", to_string(c.data.prompt_source)},
               {"prompt_file", c.data.prompt_file},
               {"eval_prompts", c.data.eval_prompts},
               {"eval_samples_per_prompt", c.data.eval_samples_per_prompt}};
  j["oracle"] = {{"reward_kind", to_string(c.oracle.reward_kind)},
                 {"hidden", c.oracle.hidden},
                 {"gain", c.oracle.gain},
                 {"length_bias_coef", c.oracle.length_bias_coef},
                 {"imported_scores_file", c.oracle.imported_scores_file}};
  j["selection"] = {{"selector", to_string(c.selection.selector)},
                    {"iterations", c.selection.iterations},
                    {"batch_size", c.selection.batch_size},
                    {"budget", c.selection.budget},
                    {"lambda", c.selection.lambda},
                    {"kappa_mu", c.selection.kappa_mu},
                    {"nu", c.selection.nu},
                    {"proj_dim", c.selection.proj_dim},
                    {"projection", to_string(c.selection.projection)},
                    {"normalize_gradients", c.selection.normalize_gradients},
                    {"refresh_features", c.selection.refresh_features},
                    {"random_ties", c.selection.random_ties},
                    {"feature_params", to_string(c.selection.feature_params)}};
  j["training"] = {{"trainer", to_string(c.training.trainer)},
                   {"reg_lambda", c.training.reg_lambda},
                   {"learning_rate", c.training.learning_rate},
                   {"lr_decay", c.training.lr_decay},
                   {"momentum", c.training.momentum},
                   {"epochs_per_iteration", c.training.epochs_per_iteration},
                   {"minibatch_size", c.training.minibatch_size},
                   {"cumulative", c.training.cumulative}};
  j["seeds"] = {{"model_init", c.seeds.model_init},
                {"generation", c.seeds.generation},
                {"oracle", c.seeds.oracle},
                {"projection", c.seeds.projection},
                {"selection", c.seeds.selection}};
  j["runtime"] = {{"threads", c.runtime.threads}};
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration root must be an object");
  static const std::set<std::string> kSections = {"model",    "data",  "oracle", "selection",
                                                  "training", "seeds", "runtime"};
  for (const auto& [key, value] : j.items()) {
    if (!kSections.contains(key)) throw ConfigError("unknown section '" + key + "'");
  }

  RunConfig c;
  {
    SectionReader r(j, "model");
    r.read("vocab_size", c.model.vocab_size);
    r.read("prompt_len", c.model.prompt_len);
    r.read("response_len", c.model.response_len);
    r.read("hidden_widths", c.model.hidden_widths);
    r.read("init_scale", c.model.init_scale);
    r.read("beta", c.model.beta);
    r.read_enum("reward_mode", c.model.reward_mode, kRewardModes);
    r.read("direct_width", c.model.direct_width);
    r.read("direct_depth", c.model.direct_depth);
    r.read("mirrored_input", c.model.mirrored_input);
    r.read("sft_steps", c.model.sft_steps);
    r.read("sft_learning_rate", c.model.sft_learning_rate);
    r.finish();
  }
  {
    SectionReader r(j, "data");
    r.read("prompts_per_iteration", c.data.prompts_per_iteration);
    r.read("m_pairs", c.data.m_pairs);
    r.read("prompt_pool_size", c.data.prompt_pool_size);
    r.read_enum("prompt_source", c.data.prompt_source, kPromptSources);
    r.read("prompt_file", c.data.prompt_file);
    r.read("eval_prompts", c.data.eval_prompts);
    r.read("eval_samples_per_prompt", c.data.eval_samples_per_prompt);
    r.finish();
  }
  {
    SectionReader r(j, "oracle");
    r.read_enum("reward_kind", c.oracle.reward_kind, kGroundTruths);
    r.read("hidden", c.oracle.hidden);
    r.read("gain", c.oracle.gain);
    r.read("length_bias_coef", c.oracle.length_bias_coef);
    r.read("imported_scores_file", c.oracle.imported_scores_file);
    r.finish();
  }
  {
    SectionReader r(j, "selection");
    r.read_enum("selector", c.selection.selector, kSelectors);
    r.read("iterations", c.selection.iterations);
    r.read("batch_size", c.selection.batch_size);
    r.read("budget", c.selection.budget);
    r.read("lambda", c.selection.lambda);
    r.read("kappa_mu", c.selection.kappa_mu);
    r.read("nu", c.selection.nu);
    r.read("proj_dim", c.selection.proj_dim);
    r.read_enum("projection", c.selection.projection, kProjections);
    r.read("normalize_gradients", c.selection.normalize_gradients);
    r.read("refresh_features", c.selection.refresh_features);
    r.read("random_ties", c.selection.random_ties);
    r.read_enum("feature_params", c.selection.feature_params, kFeatureParams);
    r.finish();
  }
  {
    SectionReader r(j, "training");
    r.read_enum("trainer", c.training.trainer, kTrainers);
    r.read("reg_lambda", c.training.reg_lambda);
    r.read("learning_rate", c.training.learning_rate);
    r.read("lr_decay", c.training.lr_decay);
    r.read("momentum", c.training.momentum);
    r.read("epochs_per_iteration", c.training.epochs_per_iteration);
    r.read("minibatch_size", c.training.minibatch_size);
    r.read("cumulative", c.training.cumulative);
    r.finish();
  }
  {
    SectionReader r(j, "seeds");
    r.read("model_init", c.seeds.model_init);
    r.read("generation", c.seeds.generation);
    r.read("oracle", c.seeds.oracle);
    r.read("projection", c.seeds.projection);
    r.read("selection", c.seeds.selection);
    r.finish();
  }
  {
    SectionReader r(j, "runtime");
    r.read("threads", c.runtime.threads);
    r.finish();
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  require(model.vocab_size >= 2, "model.vocab_size must be >= 2");
  require(model.prompt_len >= 1, "model.prompt_len must be >= 1");
  require(model.response_len >= 1, "model.response_len must be >= 1");
  require(!model.hidden_widths.empty(), "model.hidden_widths must not be empty");
  for (int w : model.hidden_widths) require(w >= 1, "model.hidden_widths entries must be >= 1");
  require(std::isfinite(model.init_scale) && model.init_scale >= 0.0,
          "model.init_scale must be finite and >= 0");
  require(std::isfinite(model.beta) && model.beta > 0.0, "model.beta must be > 0");
  require(model.direct_width >= 1, "model.direct_width must be >= 1");
  require(model.direct_depth >= 1, "model.direct_depth must be >= 1");
  require(!model.mirrored_input || model.direct_width % 2 == 0,
          "model.direct_width must be even when model.mirrored_input is set");
  require(model.sft_steps >= 0, "model.sft_steps must be >= 0");
  require(model.sft_learning_rate >= 0.0, "model.sft_learning_rate must be >= 0");

  require(data.prompts_per_iteration >= 1, "data.prompts_per_iteration must be >= 1");
  require(data.m_pairs >= 2, "data.m_pairs must be >= 2");
  require(data.eval_prompts >= 1, "data.eval_prompts must be >= 1");
  require(data.eval_samples_per_prompt >= 1, "data.eval_samples_per_prompt must be >= 1");
  if (data.prompt_source == PromptSourceMode::Synthetic) {
    require(data.prompt_pool_size >= data.prompts_per_iteration,
            "data.prompt_pool_size must be >= data.prompts_per_iteration");
  } else {
    require(!data.prompt_file.empty(), "data.prompt_file is required for imported prompts");
  }

  require(oracle.hidden >= 1, "oracle.hidden must be >= 1");
  require(std::isfinite(oracle.gain), "oracle.gain must be finite");
  require(std::isfinite(oracle.length_bias_coef), "oracle.length_bias_coef must be finite");

  require(selection.iterations >= 1, "selection.iterations must be >= 1");
  require(selection.batch_size >= 1, "selection.batch_size must be >= 1");
  require(selection.budget == 0 || selection.budget == budget(),
          "selection.budget must equal iterations * batch_size (" + std::to_string(budget()) + ")");
  require(selection.lambda > 0.0, "selection.lambda must be > 0");
  require(selection.kappa_mu > 0.0 && selection.kappa_mu <= 0.25,
          "selection.kappa_mu must lie in (0, 0.25]");
  require(std::isfinite(selection.nu) && selection.nu >= 0.0, "selection.nu must be >= 0");
  require(selection.proj_dim >= 1, "selection.proj_dim must be >= 1");

  require(training.reg_lambda >= 0.0, "training.reg_lambda must be >= 0");
  require(std::isfinite(training.learning_rate) && training.learning_rate >= 0.0,
          "training.learning_rate must be >= 0");
  require(training.lr_decay > 0.0 && training.lr_decay <= 1.0,
          "training.lr_decay must lie in (0, 1]");
  require(training.momentum >= 0.0 && training.momentum < 1.0,
          "training.momentum must lie in [0, 1)");
  require(training.epochs_per_iteration >= 0, "training.epochs_per_iteration must be >= 0");
  require(training.minibatch_size >= 1, "training.minibatch_size must be >= 1");

  require(runtime.threads >= 1, "runtime.threads must be >= 1");
}

RunConfig RunConfig::with_seed(std::uint64_t seed) const {
  RunConfig copy = *this;
  copy.seeds = {seed, seed, seed, seed, seed};
  return copy;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("cannot parse config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << to_json(config).dump(2) << '\n';
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> keys;
  const json defaults = to_json(RunConfig{});
  for (const auto& [section, body] : defaults.items()) {
    for (const auto& [key, value] : body.items()) keys.emplace_back(section, key);
  }
  return keys;
}

void apply_override(json& config_json, std::string_view key, std::string_view text) {
  std::string section_name;
  std::string leaf(key);
  if (const auto dot = key.find('.'); dot != std::string_view::npos) {
    section_name = std::string(key.substr(0, dot));
    leaf = std::string(key.substr(dot + 1));
  }
  std::vector<std::string> matches;
  for (const auto& [section, name] : config_keys()) {
    if (name == leaf && (section_name.empty() || section == section_name)) matches.push_back(section);
  }
  if (matches.empty()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  if (matches.size() > 1) {
    throw ConfigError("ambiguous configuration key '" + std::string(key) +
                      "'; qualify it as section.key");
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = std::string(text);
  }
  config_json[matches.front()][leaf] = std::move(value);
}

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  // Thread count does not influence results.
  j.erase("runtime");
  const std::string canonical = j.dump();
  return hex64(fnv1a64(canonical.data(), canonical.size()));
}

}  // namespace activedpo
