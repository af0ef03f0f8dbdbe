#include "activedpo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "activedpo/direct_reward.hpp"
#include "activedpo/errors.hpp"
#include "activedpo/io.hpp"
#include "activedpo/parallel.hpp"
#include "activedpo/selection.hpp"
#include "activedpo/serialize.hpp"
#include "activedpo/trainer.hpp"

namespace activedpo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kStateVersion = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AnyModel initial_model(const RunConfig& config, const PolicyModel& base) {
  if (config.model.reward_mode == RewardMode::Direct) return DirectRewardNet::initialize(config);
  return base;
}

RewardModel& as_reward_model(AnyModel& model) {
  return std::visit([](auto& m) -> RewardModel& { return m; }, model);
}

const RewardModel& as_reward_model(const AnyModel& model) {
  return std::visit([](const auto& m) -> const RewardModel& { return m; }, model);
}

bool uses_features(Selector s) { return s == Selector::ActiveDpo || s == Selector::FrozenFeature; }

std::string iteration_file(const std::string& dir, const std::string& stem, int t,
                           const std::string& ext) {
  std::ostringstream name;
  name << stem << '_' << std::setw(4) << std::setfill('0') << t << ext;
  return (fs::path(dir) / name.str()).string();
}

// Drops rows beyond the last persisted iteration, left behind by a crash
// between appending a row and committing the state file.
void truncate_jsonl(const std::string& path, int max_iteration) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string line, kept;
  bool changed = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json row = json::parse(line, nullptr, false);
    if (!row.is_discarded() && row.contains("iteration") &&
        row["iteration"].get<int>() > max_iteration) {
      changed = true;
      continue;
    }
    kept += line;
    kept += '\n';
  }
  in.close();
  if (changed) write_file_atomic(path, kept);
}

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("design snapshot truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

constexpr char kDesignMagic[8] = {'A', 'D', 'P', 'O', 'D', 'S', 'G', 'N'};

}  // namespace

std::string encode_design(const DesignState& state) {
  std::string out(kDesignMagic, sizeof(kDesignMagic));
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(state.dim()));
  put<std::uint64_t>(out, state.count());
  put<double>(out, state.lambda());
  put<double>(out, state.kappa_mu());
  const auto n = static_cast<std::size_t>(state.dim()) * state.dim();
  out.append(reinterpret_cast<const char*>(state.v().data()), n * sizeof(double));
  out.append(reinterpret_cast<const char*>(state.v_inv().data()), n * sizeof(double));
  return out;
}

DesignState decode_design(const std::string& bytes) {
  if (bytes.size() < sizeof(kDesignMagic) ||
      std::memcmp(bytes.data(), kDesignMagic, sizeof(kDesignMagic)) != 0)
    throw FormatError("not a design snapshot");
  std::size_t pos = sizeof(kDesignMagic);
  if (take<std::uint32_t>(bytes, pos) != 1) throw FormatError("unsupported design snapshot version");
  const auto dim = take<std::uint32_t>(bytes, pos);
  const auto count = take<std::uint64_t>(bytes, pos);
  const auto lambda = take<double>(bytes, pos);
  const auto kappa = take<double>(bytes, pos);
  const std::size_t n = static_cast<std::size_t>(dim) * dim;
  if (bytes.size() != pos + 2 * n * sizeof(double)) throw FormatError("design snapshot size mismatch");
  Eigen::MatrixXd v(dim, dim), v_inv(dim, dim);
  std::memcpy(v.data(), bytes.data() + pos, n * sizeof(double));
  std::memcpy(v_inv.data(), bytes.data() + pos + n * sizeof(double), n * sizeof(double));
  return DesignState::from_matrices(lambda, kappa, std::move(v), std::move(v_inv), count);
}

std::vector<GradientFeature> compute_features(const RewardModel& model,
                                              const std::vector<Triplet>& triplets,
                                              const Projector& projector, bool normalize,
                                              const ParamRange& mask, int model_iteration,
                                              int threads) {
  std::vector<GradientFeature> features(triplets.size());
  parallel_for(triplets.size(), threads, [&](std::size_t i) {
    const Triplet& t = triplets[i];
    Eigen::VectorXd ga, gb;
    model.reward_and_grad(t.prompt, t.response_a, ga);
    model.reward_and_grad(t.prompt, t.response_b, gb);
    features[i] = featurize(t, apply_mask(ga, mask), apply_mask(gb, mask), projector, normalize,
                            model_iteration);
  });
  return features;
}

struct Runner::Pending {
  DesignState design;
  std::vector<GradientFeature> features;
  std::vector<Triplet> pool;
  double pool_seconds = 0.0;
  double select_seconds = 0.0;
};

Runner::Runner(const RunConfig& config) : Runner(config, std::string()) {
  history_.push_back([&] {
    Metrics m;
    const EvalResult e = evaluate_model(model_);
    m.iteration = 0;
    m.mean_true_reward = e.mean_true_reward;
    m.win_rate = e.win_rate;
    m.selector = std::string(to_string(config_.selection.selector));
    return m;
  }());
}

Runner::Runner(const RunConfig& config, std::string run_dir)
    : config_((config.validate(), config)),
      hash_(activedpo::config_hash(config)),
      run_dir_(std::move(run_dir)),
      prompts_(make_prompt_sets(config)),
      gt_(GroundTruthReward::from_config(config)),
      oracle_(make_oracle(config)),
      base_(PolicyModel::initialize(config)),
      initial_(initial_model(config, base_)),
      model_(initial_),
      design_(config.selection.proj_dim, config.selection.lambda, config.selection.kappa_mu) {
  const RewardModel& m = as_reward_model(model_);
  const ParamRange mask = feature_mask(m);
  const std::size_t ambient = mask ? mask->second - mask->first : m.num_params();
  projector_ = std::make_unique<Projector>(config_.seeds.projection, ambient,
                                           config_.selection.proj_dim,
                                           config_.selection.projection);
}

Runner::~Runner() = default;

std::unique_ptr<Runner> Runner::create(const RunConfig& config, const std::string& run_dir) {
  if (run_dir.empty()) throw InvalidArgument("run directory must not be empty");
  if (fs::exists(fs::path(run_dir) / "state.json"))
    throw InvalidArgument("'" + run_dir + "' already holds a run; use resume");
  std::error_code ec;
  fs::create_directories(fs::path(run_dir) / "checkpoints", ec);
  fs::create_directories(fs::path(run_dir) / "features", ec);
  if (ec) throw IoError("cannot create '" + run_dir + "': " + ec.message());
  std::unique_ptr<Runner> runner(new Runner(config, run_dir));
  runner->persist_initial();
  return runner;
}

std::unique_ptr<Runner> Runner::resume(const std::string& run_dir) {
  const RunConfig config = load_config((fs::path(run_dir) / "config.json").string());
  std::unique_ptr<Runner> runner(new Runner(config, run_dir));
  runner->load_state();
  return runner;
}

const RewardModel& Runner::reward_model() const { return as_reward_model(model_); }
RewardModel& Runner::mutable_reward_model() { return as_reward_model(model_); }

ParamRange Runner::feature_mask(const RewardModel& model) const {
  if (config_.selection.feature_params == FeatureParams::OutputLayer)
    return model.output_layer_range();
  return std::nullopt;
}

EvalResult Runner::evaluate_model(const AnyModel& model) const {
  const auto& d = config_.data;
  const std::uint64_t seed = config_.seeds.generation;
  if (const auto* policy = std::get_if<PolicyModel>(&model)) {
    return evaluate(*policy, base_, gt_, prompts_.eval, d.eval_samples_per_prompt, seed);
  }
  // A learned reward is evaluated through best-of-n reranking of samples from
  // the frozen base policy; the first sample wins ties.
  const int n = d.m_pairs;
  auto reranker = [&](const RewardModel& rm) {
    return [&, n](const TokenSeq& x, RngStream& s) {
      const auto candidates = base_.generate(x, n, s);
      std::size_t best = 0;
      double best_r = rm.reward(x, candidates[0]);
      for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double r = rm.reward(x, candidates[i]);
        if (r > best_r) best = i, best_r = r;
      }
      return candidates[best];
    };
  };
  return evaluate(reranker(as_reward_model(model)), reranker(as_reward_model(initial_)), gt_,
                  prompts_.eval, d.eval_samples_per_prompt, seed);
}

const IterationPlan& Runner::begin_iteration() {
  if (pending_) return *pending_;
  if (finished()) throw StateError("run is complete", "idle");
  const int t = iteration_ + 1;
  const auto& sel = config_.selection;
  const int threads = config_.runtime.threads;

  auto clock = Clock::now();
  const auto prompts = prompts_for_iteration(prompts_.train, config_.data.prompts_per_iteration,
                                             config_.seeds.generation, t);
  const PolicyModel& generator =
      std::holds_alternative<PolicyModel>(model_) ? std::get<PolicyModel>(model_) : base_;
  CandidatePool pool = build_pool(generator, prompts, config_.data.m_pairs,
                                  RngStream(config_.seeds.generation, "gen", {std::uint64_t(t)}),
                                  next_id_, t, threads);
  if (static_cast<int>(pool.triplets.size()) < sel.batch_size) {
    throw PoolExhausted("iteration " + std::to_string(t) + ": pool has " +
                        std::to_string(pool.triplets.size()) + " distinct pairs (" +
                        std::to_string(pool.dropped) + " identical pairs dropped) but batch size is " +
                        std::to_string(sel.batch_size));
  }
  const double pool_seconds = seconds_since(clock);

  clock = Clock::now();
  auto detail = std::make_unique<Pending>(Pending{design_, {}, {}, pool_seconds, 0.0});
  SelectionPool candidates;
  candidates.ids.reserve(pool.triplets.size());
  for (const auto& tr : pool.triplets) candidates.ids.push_back(tr.id);

  if (uses_features(sel.selector)) {
    const bool frozen = sel.selector == Selector::FrozenFeature;
    const RewardModel& feature_model = as_reward_model(frozen ? initial_ : model_);
    const ParamRange mask = feature_mask(feature_model);
    const int model_iteration = frozen ? 0 : t - 1;
    if (!frozen && sel.refresh_features && !triplets_.empty()) {
      const auto history = compute_features(feature_model, triplets_, *projector_,
                                            sel.normalize_gradients, mask, model_iteration, threads);
      std::vector<Eigen::VectorXd> phis;
      phis.reserve(history.size());
      for (const auto& f : history) phis.push_back(f.phi);
      detail->design = DesignState::rebuild(sel.proj_dim, sel.lambda, sel.kappa_mu, phis);
    }
    candidates.features = compute_features(feature_model, pool.triplets, *projector_,
                                           sel.normalize_gradients, mask, model_iteration, threads);
  } else if (sel.selector == Selector::MarginMax || sel.selector == Selector::MarginMin) {
    const RewardModel& rm = reward_model();
    candidates.margins.resize(pool.triplets.size());
    parallel_for(pool.triplets.size(), threads,
                 [&](std::size_t i) { candidates.margins[i] = margin_score(rm, pool.triplets[i]); });
  }

  RngStream tie_stream(config_.seeds.selection, "select", {std::uint64_t(t)});
  const SelectionResult chosen = select_batch(candidates, detail->design, sel.batch_size,
                                              sel.selector, tie_stream, sel.random_ties);
  detail->select_seconds = seconds_since(clock);

  std::unordered_map<TripletId, std::size_t> index;
  for (std::size_t i = 0; i < pool.triplets.size(); ++i) index[pool.triplets[i].id] = i;
  IterationPlan plan;
  plan.iteration = t;
  plan.pool_size = static_cast<int>(pool.triplets.size());
  plan.pool_dropped = pool.dropped;
  for (std::size_t k = 0; k < chosen.ids.size(); ++k) {
    plan.items.push_back(
        SelectedItem{pool.triplets[index.at(chosen.ids[k])], chosen.scores[k], static_cast<int>(k)});
  }
  detail->features = std::move(candidates.features);
  detail->pool = std::move(pool.triplets);
  pending_detail_ = std::move(detail);
  pending_ = std::move(plan);
  return *pending_;
}

std::vector<PreferenceRecord> Runner::oracle_labels() const {
  if (!pending_) throw StateError("no batch is pending", "idle");
  std::vector<PreferenceRecord> records;
  records.reserve(pending_->items.size());
  for (const auto& item : pending_->items)
    records.push_back(oracle_->label(item.triplet, pending_->iteration));
  return records;
}

Metrics Runner::complete_iteration(const std::vector<PreferenceRecord>& labels) {
  if (!pending_) throw StateError("no batch is pending", "idle");
  const IterationPlan& plan = *pending_;
  const int t = plan.iteration;
  if (labels.size() != plan.items.size())
    throw InvalidArgument("expected " + std::to_string(plan.items.size()) + " labels, got " +
                          std::to_string(labels.size()));
  std::unordered_map<TripletId, const PreferenceRecord*> by_id;
  for (const auto& r : labels) {
    if (!by_id.emplace(r.triplet_id, &r).second)
      throw InvalidArgument("duplicate label for triplet " + std::to_string(r.triplet_id));
  }
  // Labels are stored in selection-rank order regardless of arrival order.
  std::vector<PreferenceRecord> records;
  records.reserve(plan.items.size());
  for (const auto& item : plan.items) {
    const auto it = by_id.find(item.triplet.id);
    if (it == by_id.end())
      throw InvalidArgument("missing label for triplet " + std::to_string(item.triplet.id));
    PreferenceRecord r = *it->second;
    r.labeled_at_iteration = t;
    records.push_back(r);
  }

  const auto start = Clock::now();
  const std::size_t first_new = triplets_.size();
  for (std::size_t k = 0; k < plan.items.size(); ++k) {
    triplets_.push_back(plan.items[k].triplet);
    labels_.push_back(records[k]);
  }

  std::vector<LabeledPair> pairs;
  const std::size_t from = config_.training.cumulative ? 0 : first_new;
  for (std::size_t i = from; i < triplets_.size(); ++i) pairs.push_back(resolve(triplets_[i], labels_[i]));
  RngStream shuffle(config_.seeds.model_init, "train-shuffle", {std::uint64_t(t)});
  TrainReport report;
  try {
    report = train(mutable_reward_model(), pairs, config_.training, shuffle, config_.runtime.threads);
  } catch (...) {
    triplets_.resize(first_new);
    labels_.resize(first_new);
    throw;
  }
  const double train_seconds = seconds_since(start);

  const auto eval_start = Clock::now();
  const EvalResult e = evaluate_model(model_);
  const double eval_seconds = seconds_since(eval_start);

  if (uses_features(config_.selection.selector)) design_ = pending_detail_->design;
  next_id_ += static_cast<TripletId>(plan.pool_size);
  iteration_ = t;

  Metrics m;
  m.iteration = t;
  m.mean_true_reward = e.mean_true_reward;
  m.win_rate = e.win_rate;
  m.selector = std::string(to_string(config_.selection.selector));
  m.labels_used = static_cast<std::int64_t>(labels_.size());
  m.train_initial_loss = report.initial_loss;
  m.train_final_loss = report.final_loss;
  m.param_distance = report.param_distance;
  m.pool_size = plan.pool_size;
  m.pool_dropped = plan.pool_dropped;
  m.wall_time = pending_detail_->pool_seconds + pending_detail_->select_seconds + train_seconds +
                eval_seconds;
  history_.push_back(m);

  const json timing = {{"iteration", t},
                       {"pool_seconds", pending_detail_->pool_seconds},
                       {"select_seconds", pending_detail_->select_seconds},
                       {"train_seconds", train_seconds},
                       {"eval_seconds", eval_seconds},
                       {"wall_time", m.wall_time}};
  const std::vector<SelectedItem> items = plan.items;
  if (!run_dir_.empty()) persist_iteration(m, items, records, timing);
  pending_.reset();
  pending_detail_.reset();
  return m;
}

Metrics Runner::step() {
  begin_iteration();
  return complete_iteration(oracle_labels());
}

void Runner::run(int stop_after) {
  while (!finished() && (stop_after < 0 || iteration_ < stop_after)) step();
}

void Runner::persist_initial() {
  save_config(config_, (fs::path(run_dir_) / "config.json").string());
  Metrics m;
  const EvalResult e = evaluate_model(model_);
  m.iteration = 0;
  m.mean_true_reward = e.mean_true_reward;
  m.win_rate = e.win_rate;
  m.selector = std::string(to_string(config_.selection.selector));
  history_ = {m};
  for (const char* name : {"metrics.jsonl", "selections.jsonl", "labels.jsonl", "timings.jsonl"})
    write_file_atomic((fs::path(run_dir_) / name).string(), "");
  append_line((fs::path(run_dir_) / "metrics.jsonl").string(), metrics_row(m).dump());
  save_checkpoint(iteration_file((fs::path(run_dir_) / "checkpoints").string(), "iter", 0, ".ckpt"),
                  model_);
  write_state();
}

void Runner::persist_iteration(const Metrics& metrics, const std::vector<SelectedItem>& items,
                               const std::vector<PreferenceRecord>& records, const json& timing) {
  const fs::path dir(run_dir_);
  const int t = metrics.iteration;
  const std::string strategy(to_string(config_.selection.selector));
  std::string selections, label_lines;
  for (std::size_t k = 0; k < items.size(); ++k) {
    json pick = {{"iteration", t},
                 {"pick", k},
                 {"triplet_id", items[k].triplet.id},
                 {"score", items[k].score},
                 {"strategy", strategy}};
    selections += pick.dump() + "\n";
    json label = records[k];
    label["iteration"] = t;
    label["triplet"] = items[k].triplet;
    label_lines += label.dump() + "\n";
  }
  {
    std::ofstream out(dir / "selections.jsonl", std::ios::app);
    out << selections;
  }
  {
    std::ofstream out(dir / "labels.jsonl", std::ios::app);
    out << label_lines;
  }
  append_line((dir / "timings.jsonl").string(), timing.dump());
  append_line((dir / "metrics.jsonl").string(), metrics_row(metrics).dump());
  save_checkpoint(iteration_file((dir / "checkpoints").string(), "iter", t, ".ckpt"), model_);
  if (!pending_detail_->features.empty()) {
    FeatureCacheHeader header;
    header.iteration = static_cast<std::uint32_t>(t);
    header.dim = static_cast<std::uint32_t>(config_.selection.proj_dim);
    header.normalized = config_.selection.normalize_gradients;
    header.rademacher = config_.selection.projection == ProjectionScheme::Rademacher;
    header.projector_seed = config_.seeds.projection;
    write_feature_cache(iteration_file((dir / "features").string(), "pool", t, ".feat"), header,
                        pending_detail_->features);
  }
  write_state();
}

void Runner::write_state() {
  const fs::path dir(run_dir_);
  write_file_atomic((dir / "design.bin").string(), encode_design(design_));
  json history = json::array();
  for (const auto& m : history_) history.push_back(m);
  const json state = {{"version", kStateVersion},
                      {"iteration", iteration_},
                      {"config_hash", hash_},
                      {"next_id", next_id_},
                      {"checkpoint", "checkpoints/" + iteration_file("", "iter", iteration_, ".ckpt")},
                      {"design", "design.bin"},
                      {"triplets", triplets_},
                      {"labels", labels_},
                      {"history", history}};
  // The state file is written last: it is the commit point of an iteration.
  write_file_atomic((dir / "state.json").string(), state.dump());
}

void Runner::load_state() {
  const fs::path dir(run_dir_);
  json state;
  try {
    state = json::parse(read_file((dir / "state.json").string()));
  } catch (const json::parse_error& e) {
    throw FormatError("state.json: " + std::string(e.what()));
  }
  if (state.value("version", 0) != kStateVersion) throw FormatError("unsupported state version");
  if (state.at("config_hash").get<std::string>() != hash_)
    throw ConfigError("config.json does not match the run state (hash " +
                      state.at("config_hash").get<std::string>() + " vs " + hash_ + ")");
  iteration_ = state.at("iteration").get<int>();
  next_id_ = state.at("next_id").get<TripletId>();
  triplets_ = state.at("triplets").get<std::vector<Triplet>>();
  labels_ = state.at("labels").get<std::vector<PreferenceRecord>>();
  history_ = state.at("history").get<std::vector<Metrics>>();
  model_ = load_checkpoint((dir / state.at("checkpoint").get<std::string>()).string());
  if (model_.index() != initial_.index())
    throw FormatError("checkpoint model kind does not match the configured reward mode");
  design_ = decode_design(read_file((dir / state.at("design").get<std::string>()).string()));
  for (const char* name : {"metrics.jsonl", "selections.jsonl", "labels.jsonl", "timings.jsonl"})
    truncate_jsonl((dir / name).string(), iteration_);
}

std::vector<Metrics> run(const RunConfig& config, const std::string& run_dir) {
  if (run_dir.empty()) {
    Runner runner(config);
    runner.run();
    return runner.history();
  }
  auto runner = Runner::create(config, run_dir);
  runner->run();
  return runner->history();
}

namespace {

void check_comparable(const std::vector<RunConfig>& configs) {
  if (configs.empty()) throw InvalidArgument("compare needs at least one config");
  json reference = to_json(configs.front());
  reference["selection"].erase("selector");
  for (std::size_t i = 1; i < configs.size(); ++i) {
    json other = to_json(configs[i]);
    other["selection"].erase("selector");
    if (other != reference) {
      const json diff = json::diff(reference, other);
      throw ConfigError("compared configs differ outside the selector: " + diff.dump());
    }
  }
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  // Sample standard deviation; zero for a single seed.
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, sd};
}

json summary_json(const SummaryRow& r) {
  return {{"strategy", r.strategy},         {"column", r.column},
          {"iteration", r.iteration},       {"seeds", r.seeds},
          {"reward_mean", r.reward_mean},   {"reward_std", r.reward_std},
          {"win_rate_mean", r.win_rate_mean}, {"win_rate_std", r.win_rate_std},
          {"labels_used", r.labels_used}};
}

std::string format_double(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

}  // namespace

CompareResult compare(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      const std::string& out_dir, int workers) {
  check_comparable(configs);
  if (seeds.empty()) throw InvalidArgument("compare needs at least one seed");
  for (const auto& c : configs) c.validate();

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  }
  CompareResult result;
  result.seeds = seeds;
  for (const auto& c : configs) result.strategies.emplace_back(to_string(c.selection.selector));
  result.histories.assign(configs.size(), std::vector<std::vector<Metrics>>(seeds.size()));

  auto column_dir = [&](std::size_t c) {
    std::ostringstream name;
    name << std::setw(2) << std::setfill('0') << c << '_' << result.strategies[c];
    return fs::path(out_dir) / name.str();
  };

  const std::size_t jobs = configs.size() * seeds.size();
  parallel_for(jobs, workers, [&](std::size_t job) {
    const std::size_t c = job / seeds.size();
    const std::size_t s = job % seeds.size();
    RunConfig config = configs[c].with_seed(seeds[s]);
    std::string dir;
    if (!out_dir.empty()) dir = (column_dir(c) / ("seed_" + std::to_string(seeds[s]))).string();
    result.histories[c][s] = run(config, dir);
  });

  const int iterations = configs.front().selection.iterations;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (int t = 0; t <= iterations; ++t) {
      std::vector<double> rewards, wins;
      std::int64_t labels = 0;
      for (const auto& h : result.histories[c]) {
        rewards.push_back(h.at(t).mean_true_reward);
        wins.push_back(h.at(t).win_rate);
        labels = h.at(t).labels_used;
      }
      SummaryRow row;
      row.strategy = result.strategies[c];
      row.column = static_cast<int>(c);
      row.iteration = t;
      row.seeds = static_cast<int>(seeds.size());
      std::tie(row.reward_mean, row.reward_std) = mean_std(rewards);
      std::tie(row.win_rate_mean, row.win_rate_std) = mean_std(wins);
      row.labels_used = labels;
      result.summary.push_back(row);
    }
  }

  if (!out_dir.empty()) {
    std::vector<json> rows;
    std::string csv =
        "strategy,column,iteration,seeds,reward_mean,reward_std,win_rate_mean,win_rate_std,"
        "labels_used\n";
    for (const auto& r : result.summary) {
      rows.push_back(summary_json(r));
      csv += r.strategy + "," + std::to_string(r.column) + "," + std::to_string(r.iteration) + "," +
             std::to_string(r.seeds) + "," + format_double(r.reward_mean) + "," +
             format_double(r.reward_std) + "," + format_double(r.win_rate_mean) + "," +
             format_double(r.win_rate_std) + "," + std::to_string(r.labels_used) + "\n";
    }
    write_jsonl((fs::path(out_dir) / "summary.jsonl").string(), rows);
    write_file_atomic((fs::path(out_dir) / "summary.csv").string(), csv);
    std::string final_csv = "strategy,column,seed,final_reward,final_win_rate\n";
    for (std::size_t c = 0; c < configs.size(); ++c) {
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const Metrics& last = result.histories[c][s].back();
        final_csv += result.strategies[c] + "," + std::to_string(c) + "," +
                     std::to_string(seeds[s]) + "," + format_double(last.mean_true_reward) + "," +
                     format_double(last.win_rate) + "\n";
      }
    }
    write_file_atomic((fs::path(out_dir) / "final.csv").string(), final_csv);
  }
  return result;
}

CompareResult compare(const RunConfig& base, const std::vector<Selector>& strategies,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      int workers) {
  std::vector<RunConfig> configs;
  for (Selector s : strategies) {
    RunConfig c = base;
    c.selection.selector = s;
    configs.push_back(c);
  }
  return compare(configs, seeds, out_dir, workers);
}

}  // namespace activedpo
