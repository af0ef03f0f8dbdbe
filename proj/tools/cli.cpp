#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "activedpo/annotation.hpp"
#include "activedpo/annotation_server.hpp"
#include "activedpo/checkpoint.hpp"
#include "activedpo/config.hpp"
#include "activedpo/errors.hpp"
#include "activedpo/gradient_feature.hpp"
#include "activedpo/harness.hpp"
#include "activedpo/io.hpp"
#include "activedpo/serialize.hpp"

namespace activedpo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string part = text.substr(start, comma - start);
    std::size_t used = 0;
    try {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } else {
        const std::string lo_text = part.substr(0, dash), hi_text = part.substr(dash + 1);
        std::size_t lo_used = 0, hi_used = 0;
        const std::uint64_t lo = std::stoull(lo_text, &lo_used), hi = std::stoull(hi_text, &hi_used);
        if (lo_used != lo_text.size() || hi_used != hi_text.size() || hi < lo) throw std::invalid_argument(part);
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad seed list element '" + part + "'");
    }
    start = comma + 1;
  }
  return seeds;
}

namespace {

// Config sources shared by every subcommand that builds a RunConfig: an
// optional --config file, one flag per configuration key and generic --set
// overrides.
class ConfigFlags {
 public:
  void attach(CLI::App& app) {
    app.add_option("--config", path_, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", sets_, "Override KEY=VALUE (repeatable)");
    std::map<std::string, int> leaf_count;
    for (const auto& [section, key] : config_keys()) ++leaf_count[key];
    for (const auto& [section, key] : config_keys()) {
      const std::string name = leaf_count[key] > 1 ? section + "." + key : key;
      auto& slot = values_[name];
      app.add_option("--" + name, slot, section + "." + key)->group("Configuration");
    }
  }

  RunConfig build() const {
    json j = path_.empty() ? to_json(RunConfig{}) : to_json(load_config(path_));
    for (const auto& [name, value] : values_)
      if (!value.empty()) apply_override(j, name, value);
    for (const auto& item : sets_) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects KEY=VALUE, got '" + item + "'");
      apply_override(j, item.substr(0, eq), item.substr(eq + 1));
    }
    RunConfig config = config_from_json(j);
    config.validate();
    return config;
  }

  bool any() const {
    if (!path_.empty() || !sets_.empty()) return true;
    for (const auto& [name, value] : values_)
      if (!value.empty()) return true;
    return false;
  }

 private:
  std::string path_;
  std::vector<std::string> sets_;
  std::map<std::string, std::string> values_;
};

void print_history(std::ostream& out, const std::vector<Metrics>& history) {
  for (const auto& m : history) out << metrics_row(m).dump() << '\n';
}

int cmd_run(const ConfigFlags& flags, const std::string& out_dir, const std::string& resume_dir, int stop_after,
            std::ostream& out) {
  std::unique_ptr<Runner> runner;
  if (!resume_dir.empty()) {
    if (flags.any()) throw InvalidArgument("--resume takes the configuration from the run directory");
    runner = Runner::resume(resume_dir);
  } else if (!out_dir.empty()) {
    runner = Runner::create(flags.build(), out_dir);
  } else {
    runner = std::make_unique<Runner>(flags.build());
  }
  runner->run(stop_after);
  print_history(out, runner->history());
  return 0;
}

int cmd_compare(const ConfigFlags& flags, const std::vector<std::string>& strategies, const std::string& seeds,
                const std::string& out_dir, int workers, std::ostream& out) {
  std::vector<Selector> selectors;
  for (const auto& s : strategies) selectors.push_back(parse_selector(s));
  const CompareResult result = compare(flags.build(), selectors, parse_seed_list(seeds), out_dir, workers);
  for (const auto& row : result.summary) {
    out << json{{"strategy", row.strategy},
                {"column", row.column},
                {"iteration", row.iteration},
                {"seeds", row.seeds},
                {"reward_mean", row.reward_mean},
                {"reward_std", row.reward_std},
                {"win_rate_mean", row.win_rate_mean},
                {"win_rate_std", row.win_rate_std},
                {"labels_used", row.labels_used}}
               .dump()
        << '\n';
  }
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& run_dir, std::string checkpoint, std::ostream& out) {
  RunConfig config;
  if (!run_dir.empty()) {
    if (flags.any()) throw InvalidArgument("--run takes the configuration from the run directory");
    config = load_config((fs::path(run_dir) / "config.json").string());
    if (checkpoint.empty()) {
      const json state = json::parse(read_file((fs::path(run_dir) / "state.json").string()));
      checkpoint = (fs::path(run_dir) / state.at("checkpoint").get<std::string>()).string();
    }
  } else {
    config = flags.build();
  }
  if (checkpoint.empty()) throw InvalidArgument("eval needs --checkpoint or --run");
  const Runner runner(config);
  const EvalResult r = runner.evaluate_model(load_checkpoint(checkpoint));
  out << json{{"checkpoint", checkpoint},
              {"config_hash", runner.config_hash()},
              {"mean_true_reward", r.mean_true_reward},
              {"win_rate", r.win_rate}}
             .dump()
      << '\n';
  return 0;
}

json feature_stats(const std::string& path) {
  const auto [header, features] = read_feature_cache(path);
  double min_norm = 0.0, max_norm = 0.0, sum = 0.0;
  int degenerate = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double n = features[i].phi.norm();
    min_norm = i ? std::min(min_norm, n) : n;
    max_norm = i ? std::max(max_norm, n) : n;
    sum += n;
    degenerate += features[i].degenerate;
  }
  return {{"file", fs::path(path).filename().string()},
          {"iteration", header.iteration},
          {"dim", header.dim},
          {"normalized", header.normalized},
          {"rows", features.size()},
          {"degenerate", degenerate},
          {"norm_min", min_norm},
          {"norm_mean", features.empty() ? 0.0 : sum / static_cast<double>(features.size())},
          {"norm_max", max_norm}};
}

int cmd_inspect(const std::string& run_dir, const std::string& what, int iteration, std::ostream& out) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir / "config.json")) throw IoError("'" + run_dir + "' is not a run directory");
  auto matches = [&](const json& row) { return iteration < 0 || row.value("iteration", -1) == iteration; };
  if (what == "selections" || what == "labels" || what == "metrics") {
    for (const auto& row : read_jsonl((dir / (what + ".jsonl")).string()))
      if (matches(row)) out << row.dump() << '\n';
  } else if (what == "features") {
    std::vector<fs::path> files;
    if (fs::exists(dir / "features"))
      for (const auto& e : fs::directory_iterator(dir / "features")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const json stats = feature_stats(f.string());
      if (matches(stats)) out << stats.dump() << '\n';
    }
  } else if (what == "state") {
    json state = json::parse(read_file((dir / "state.json").string()));
    out << json{{"iteration", state.at("iteration")},
                {"config_hash", state.at("config_hash")},
                {"labels", state.at("labels").size()},
                {"checkpoint", state.at("checkpoint")}}
               .dump()
        << '\n';
  } else {
    throw InvalidArgument("unknown inspect target '" + what + "'");
  }
  return 0;
}

AnnotationServer* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const ConfigFlags& flags, const std::string& host, int port, const std::string& run_dir,
              const std::string& glyph_file, bool autostart, std::ostream& out) {
  AnnotationService service(glyph_file.empty() ? GlyphMap() : GlyphMap::load(glyph_file));
  if (autostart) service.start(flags.build(), run_dir);
  AnnotationServer server(service);
  const int bound = server.bind(host, port);
  out << json{{"listening", "http://" + host + ":" + std::to_string(bound)}}.dump() << std::endl;
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  server.listen();
  g_server = nullptr;
  return 0;
}

void report(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active preference data selection for DPO on synthetic tasks"};
  app.require_subcommand(1);

  ConfigFlags run_flags, compare_flags, eval_flags, serve_flags;
  std::string out_dir, resume_dir, seeds = "1-10", run_dir, checkpoint, what = "selections", host = "127.0.0.1",
                                    glyphs, serve_dir;
  std::vector<std::string> strategies{"active_dpo", "random", "margin_max", "frozen_feature"};
  int stop_after = -1, workers = 1, iteration = -1, port = 8080;
  bool autostart = false;

  auto* run = app.add_subcommand("run", "Run one strategy");
  run_flags.attach(*run);
  run->add_option("--out", out_dir, "Persist the run under this directory");
  run->add_option("--resume", resume_dir, "Continue the run stored in this directory");
  run->add_option("--stop-after", stop_after, "Stop once this many iterations are complete");

  auto* cmp = app.add_subcommand("compare", "Run several strategies over several seeds");
  compare_flags.attach(*cmp);
  cmp->add_option("--strategies", strategies, "Selectors to compare")->delimiter(',');
  cmp->add_option("--seeds", seeds, "Seed list such as 1-10 or 1,4,9");
  cmp->add_option("--out", out_dir, "Output directory for runs and summary tables");
  cmp->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the initial model");
  eval_flags.attach(*eval);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file");
  eval->add_option("--run", run_dir, "Run directory (config and latest checkpoint)");

  auto* inspect = app.add_subcommand("inspect", "Dump selection logs or feature statistics of a run");
  inspect->add_option("run_dir", run_dir, "Run directory")->required();
  inspect->add_option("--what", what, "selections | labels | metrics | features | state");
  inspect->add_option("--iteration", iteration, "Only rows of this iteration");

  auto* serve = app.add_subcommand("serve", "Start the annotation service");
  serve_flags.attach(*serve);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--run-dir", serve_dir, "Persist the session under this directory");
  serve->add_option("--glyphs", glyphs, "Token glyph map (JSON)");
  serve->add_flag("--start", autostart, "Start a session from the configuration flags right away");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // --help and --version are "errors" with exit code 0.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    report(err, "usage_error", e.what());
    return 2;
  }

  try {
    if (*run) return cmd_run(run_flags, out_dir, resume_dir, stop_after, out);
    if (*cmp) return cmd_compare(compare_flags, strategies, seeds, out_dir, workers, out);
    if (*eval) return cmd_eval(eval_flags, run_dir, checkpoint, out);
    if (*inspect) return cmd_inspect(run_dir, what, iteration, out);
    if (*serve) return cmd_serve(serve_flags, host, port, serve_dir, glyphs, autostart, out);
  } catch (const Error& e) {
    report(err, e.kind(), e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    report(err, "format_error", e.what());
    return 1;
  } catch (const std::exception& e) {
    report(err, "internal_error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace activedpo::cli
