// Acceptance checks A1 to A10. Each prints one PASS or FAIL line with the
// measured quantities and its runtime; the exit status is nonzero when any
// selected check fails.
//
//   acceptance            run everything
//   acceptance A3 A9      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "activedpo/design_state.hpp"
#include "activedpo/env.hpp"
#include "activedpo/gradient_feature.hpp"
#include "activedpo/harness.hpp"
#include "activedpo/io.hpp"
#include "activedpo/projector.hpp"
#include "activedpo/selection.hpp"
#include "activedpo/trainer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace activedpo {
namespace {

using namespace testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  std::string name;
  std::string title;
  double limit_seconds;
  bool cpu_limit;  // limit applies to process CPU time rather than wall time
  std::function<Outcome()> body;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

PolicyArchitecture random_arch(RngStream& s) {
  const int vocab = 3 + static_cast<int>(s.uniform_int(4));
  const int lp = 1 + static_cast<int>(s.uniform_int(3));
  const int lr = 1 + static_cast<int>(s.uniform_int(4));
  std::vector<int> hidden(1 + s.uniform_int(2));
  for (int& w : hidden) w = 2 + static_cast<int>(s.uniform_int(7));
  return small_arch(vocab, lp, lr, hidden, 0.05 + 1.5 * s.uniform());
}

Outcome gradient_fidelity() {
  constexpr int kDraws = 100;
  RngStream s(1, "acceptance-fd");
  double worst_reward = 0.0, worst_loss = 0.0;
  for (int draw = 0; draw < kDraws; ++draw) {
    const PolicyArchitecture arch = random_arch(s);
    const PolicyModel m = random_policy(s, arch, 0.3 + s.uniform());

    const TokenSeq x = random_seq(s, arch.prompt_len, arch.vocab_size);
    const TokenSeq y = random_seq(s, arch.response_len, arch.vocab_size);
    VectorXd grad;
    m.reward_at(m.theta(), x, y, &grad);
    VectorXd fd = central_difference([&](const VectorXd& p) { return m.reward_at(p, x, y, nullptr); },
                                     m.theta());
    worst_reward = std::max(worst_reward, max_relative_error(grad, fd, 1e-4 * fd.lpNorm<Eigen::Infinity>()));

    std::vector<Triplet> triplets;
    std::vector<LabeledPair> pairs;
    const int n = 1 + static_cast<int>(s.uniform_int(8));
    for (int i = 0; i < n; ++i) {
      triplets.push_back({static_cast<TripletId>(i), random_seq(s, arch.prompt_len, arch.vocab_size),
                          random_seq(s, arch.response_len, arch.vocab_size),
                          random_seq(s, arch.response_len, arch.vocab_size), 1});
    }
    for (const auto& t : triplets)
      pairs.push_back(resolve(t, {t.id, s.uniform() < 0.5 ? Side::A : Side::B, LabelSource::Simulated, 1}));
    LossOptions opt;
    if (draw % 2) opt = {TrainerKind::DpoRegularized, 2.0 * s.uniform()};
    dpo_loss_at(m, m.theta(), pairs, opt, &grad);
    fd = central_difference([&](const VectorXd& p) { return dpo_loss_at(m, p, pairs, opt); }, m.theta());
    worst_loss = std::max(worst_loss, max_relative_error(grad, fd, 1e-4 * fd.lpNorm<Eigen::Infinity>()));
  }
  return {worst_reward <= 1e-5 && worst_loss <= 1e-5,
          fmt("%d draws each; worst relative error implicit_reward %.2e, dpo_loss %.2e (limit 1e-5)", kDraws,
              worst_reward, worst_loss)};
}

Outcome inverse_integrity() {
  RngStream s(2, "acceptance-inverse");
  DesignState state(64, 1.0, 0.25);
  for (int i = 0; i < 500; ++i) state.absorb(random_vector(s, 64, 0.25 + s.uniform()));
  const double err = (state.v_inv() - state.v().inverse()).cwiseAbs().maxCoeff();
  return {err <= 1e-8, fmt("d=64, 500 absorbs; max |V^-1 - inv(V)| = %.2e (limit 1e-8)", err)};
}

Outcome selection_oracle() {
  RngStream rng(3, "acceptance-brute");
  int agree = 0, max_pool = 0, max_batch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_int(31));
    const int n = 16 + static_cast<int>(rng.uniform_int(497));
    const int b = 1 + static_cast<int>(rng.uniform_int(16));
    max_pool = std::max(max_pool, n);
    max_batch = std::max(max_batch, b);
    DesignState state(d, 0.2 + rng.uniform(), 0.05 + 0.2 * rng.uniform());
    const int history = static_cast<int>(rng.uniform_int(10));
    for (int h = 0; h < history; ++h) state.absorb(random_vector(rng, d));
    const MatrixXd v0 = state.v();
    std::vector<GradientFeature> pool;
    std::vector<TripletId> ids;
    std::vector<VectorXd> phis;
    for (int i = 0; i < n; ++i) {
      ids.push_back(5000 + 7 * static_cast<TripletId>(n - i));
      phis.push_back(random_vector(rng, d));
      if (i > 0 && rng.uniform() < 0.05) phis.back() = phis[rng.uniform_int(i)];
      GradientFeature f;
      f.triplet_id = ids.back();
      f.phi = phis.back();
      pool.push_back(std::move(f));
    }
    const auto greedy = select_greedy(pool, state, b);
    const auto oracle = brute_force_select(ids, phis, v0, b, kTieTolerance);
    agree += greedy.ids == oracle.ids;
  }
  return {agree == 100, fmt("%d/100 pools identical (pool <= %d, B <= %d)", agree, max_pool, max_batch)};
}

Outcome btl_calibration() {
  // r*(x, y) = [y == 1] - [y == 2] for one-token inputs, so the gap is 1.
  VectorXd w = VectorXd::Zero(6);
  w[4] = std::sqrt(2.0) / 2.0;
  w[5] = -std::sqrt(2.0) / 2.0;
  const GroundTruthReward gt = GroundTruthReward::linear(3, w);
  const double gap = gt({0}, {1}) - gt({0}, {2});
  const BtlOracle oracle(gt, 4);
  int wins = 0;
  for (int i = 0; i < 10000; ++i)
    wins += oracle.label(Triplet{static_cast<TripletId>(i), {0}, {1}, {2}, 1}, 1).winner == Side::A;
  const double freq = wins / 10000.0;
  return {std::abs(gap - 1.0) < 1e-12 && freq >= 0.711 && freq <= 0.751,
          fmt("gap %.12f; A wins %.4f of 10000 (accept [0.711, 0.751], sigmoid(1) = 0.7311)", gap, freq)};
}

Outcome projection_quality() {
  RngStream s(5, "acceptance-jl");
  const Projector p(RunConfig{}.seeds.projection, 10000, 256);
  int within = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd a = random_unit(s, 10000), b = random_unit(s, 10000);
    const double err = std::abs(p.project(a).dot(p.project(b)) - a.dot(b));
    within += err <= 0.2;
    worst = std::max(worst, err);
  }
  return {within >= 95, fmt("%d/100 inner products within 0.2 (need 95); worst error %.3f", within, worst)};
}

Outcome normalization() {
  RngStream s(6, "acceptance-normalization");
  const auto responses = all_sequences(4, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyModel m = random_policy(s, small_arch(4, 2, 3, {8, 8}), 0.5 + s.uniform());
    const TokenSeq x = random_seq(s, 2, 4);
    double total = 0.0;
    for (const auto& y : responses) total += std::exp(m.log_prob(x, y));
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return {responses.size() == 64 && worst <= 1e-10,
          fmt("20 models, %zu responses each; max |sum - 1| = %.2e (limit 1e-10)", responses.size(), worst)};
}

Outcome headline_comparison() {
  const RunConfig base;
  const std::vector<Selector> strategies{Selector::ActiveDpo, Selector::Random, Selector::MarginMax,
                                         Selector::FrozenFeature};
  std::vector<std::uint64_t> seeds(10);
  std::iota(seeds.begin(), seeds.end(), 1);
  const CompareResult result = compare(base, strategies, seeds);

  auto finals = [&](int column) {
    std::vector<double> out;
    for (const auto& history : result.histories[column]) out.push_back(history.back().mean_true_reward);
    return out;
  };
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const auto active = finals(0), random = finals(1);
  int wins = 0;
  for (std::size_t i = 0; i < active.size(); ++i) wins += active[i] > random[i];
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < active.size(); ++i)
    per_seed << (i ? " " : "") << fmt("%+.3f", active[i] - random[i]);
  std::printf("  A7 per-seed active_dpo - random: %s\n", per_seed.str().c_str());
  return {mean(active) >= mean(random) && wins >= 7,
          fmt("mean final reward active_dpo %.4f, random %.4f, margin_max %.4f, frozen_feature %.4f; "
              "active_dpo beats random on %d/10 seeds (need 7)",
              mean(active), mean(random), mean(finals(2)), mean(finals(3)), wins)};
}

// Ranks a pool by ||phi||_{V^-1} under a fresh design, best first, lowest id
// first among equal scores.
std::vector<TripletId> rank(const std::vector<GradientFeature>& pool, const DesignState& state) {
  std::vector<std::pair<double, TripletId>> scored;
  for (const auto& f : pool) scored.emplace_back(-state.uncertainty(f.phi), f.triplet_id);
  std::sort(scored.begin(), scored.end());
  std::vector<TripletId> out;
  for (const auto& [score, id] : scored) out.push_back(id);
  return out;
}

Outcome normalization_ablation() {
  const RunConfig c;
  RngStream s(8, "acceptance-ablation");
  const PolicyArchitecture arch = small_arch(c.model.vocab_size, c.model.prompt_len, c.model.response_len,
                                             c.model.hidden_widths, c.model.beta);
  const PolicyModel m = random_policy(s, arch);
  const Projector projector(c.seeds.projection, static_cast<Eigen::Index>(m.theta().size()), c.selection.proj_dim);

  constexpr int kPool = 24;
  std::vector<VectorXd> ga(kPool), gb(kPool);
  for (int i = 0; i < kPool; ++i) {
    const TokenSeq x = random_seq(s, arch.prompt_len, arch.vocab_size);
    m.reward_and_grad(x, random_seq(s, arch.response_len, arch.vocab_size), ga[i]);
    m.reward_and_grad(x, random_seq(s, arch.response_len, arch.vocab_size), gb[i]);
  }
  auto features = [&](bool normalize, int shrunk) {
    std::vector<GradientFeature> pool;
    for (int i = 0; i < kPool; ++i) {
      const double scale = i == shrunk ? 0.1 : 1.0;
      const Triplet t{static_cast<TripletId>(i), {0}, {0}, {1}, 1};
      pool.push_back(featurize(t, scale * ga[i], scale * gb[i], projector, normalize));
    }
    return pool;
  };
  const DesignState fresh(c.selection.proj_dim, c.selection.lambda, c.selection.kappa_mu);

  // Shrink the triplet the unnormalized criterion likes best.
  const TripletId target = rank(features(false, -1), fresh).front();
  const auto raw_ranking = rank(features(false, static_cast<int>(target)), fresh);
  const auto norm_plain = rank(features(true, -1), fresh);
  const auto norm_shrunk = rank(features(true, static_cast<int>(target)), fresh);

  const auto position = std::find(raw_ranking.begin(), raw_ranking.end(), target) - raw_ranking.begin();
  const bool last = position == kPool - 1;
  const bool argmax_same = norm_plain.front() == norm_shrunk.front();
  const bool ranking_same = norm_plain == norm_shrunk;
  return {last && argmax_same && ranking_same,
          fmt("shrunk triplet %llu (unnormalized first before shrinking) ranks %td/%d unnormalized; "
              "normalized argmax %llu vs %llu, full ranking %s",
              static_cast<unsigned long long>(target), position + 1, kPool,
              static_cast<unsigned long long>(norm_plain.front()),
              static_cast<unsigned long long>(norm_shrunk.front()), ranking_same ? "identical" : "changed")};
}

Outcome uncertainty_shrinkage() {
  RngStream rng(9, "acceptance-shrink");
  int own_decreased = 0, probes_ok = 0, probes = 0, bitwise_rises = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_int(16));
    DesignState state(d, 0.1 + 2.0 * rng.uniform(), 0.01 + 0.24 * rng.uniform());
    const int history = static_cast<int>(rng.uniform_int(30));
    for (int h = 0; h < history; ++h) state.absorb(random_vector(rng, d, 0.1 + 2.0 * rng.uniform()));
    VectorXd phi = random_vector(rng, d, 0.05 + 3.0 * rng.uniform());
    if (phi.norm() == 0.0) phi[0] = 1.0;
    std::vector<VectorXd> psi;
    std::vector<double> before;
    for (int p = 0; p < 10; ++p) {
      psi.push_back(random_vector(rng, d, 3.0 * rng.uniform()));
      before.push_back(state.uncertainty(psi.back()));
    }
    const double own = state.uncertainty(phi);
    state.absorb(phi);
    own_decreased += state.uncertainty(phi) < own;
    for (int p = 0; p < 10; ++p, ++probes) {
      const double after = state.uncertainty(psi[p]);
      probes_ok += after <= before[p] * (1.0 + 1e-12);
      bitwise_rises += after > before[p];
    }
  }
  return {own_decreased == 1000 && probes_ok == probes,
          fmt("own uncertainty decreased in %d/1000 trials; %d/%d probes did not increase "
              "(rounding slack 1e-12 relative; %d rose by any amount)",
              own_decreased, probes_ok, probes, bitwise_rises)};
}

Outcome determinism_and_resume() {
  TempDir dir("acceptance_resume");
  const RunConfig c;
  const int t = c.selection.iterations;
  const int half = (t + 1) / 2;

  Runner::create(c, dir.file("full"))->run();
  Runner::create(c, dir.file("part"))->run(half);
  const std::string partial_metrics = read_file(dir.file("part") + "/metrics.jsonl");
  Runner::resume(dir.file("part"))->run();

  auto files = [](const std::string& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), root).string();
      if (rel != "timings.jsonl" && rel != "state.json") out[rel] = read_file(entry.path().string());
    }
    return out;
  };
  const auto full = files(dir.file("full")), resumed = files(dir.file("part"));
  const bool metrics_same = full.at("metrics.jsonl") == resumed.at("metrics.jsonl");
  int differing = 0;
  for (const auto& [name, bytes] : full) differing += !resumed.count(name) || resumed.at(name) != bytes;
  differing += static_cast<int>(resumed.size() > full.size());
  const auto rows = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  return {metrics_same && differing == 0,
          fmt("T=%d, stopped after %d (%td metrics rows), resumed to %td rows; metrics.jsonl %s; "
              "%d of %zu run files differ",
              t, half, rows(partial_metrics), rows(resumed.at("metrics.jsonl")),
              metrics_same ? "byte-identical" : "DIFFERS", differing, full.size())};
}

}  // namespace
}  // namespace activedpo

int main(int argc, char** argv) {
  using namespace activedpo;
  const std::vector<Check> checks{
      {"A1", "gradient fidelity", 10, false, gradient_fidelity},
      {"A2", "rank-1 inverse integrity", 5, false, inverse_integrity},
      {"A3", "selection oracle equivalence", 30, false, selection_oracle},
      {"A4", "BTL calibration", 1, false, btl_calibration},
      {"A5", "projection quality", 5, false, projection_quality},
      {"A6", "probability normalization", 1, false, normalization},
      {"A7", "headline comparison", 30 * 60, true, headline_comparison},
      {"A8", "normalization ablation", 1, false, normalization_ablation},
      {"A9", "uncertainty shrinkage", 5, false, uncertainty_shrinkage},
      {"A10", "determinism and resume", 5 * 60, false, determinism_and_resume},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& name : wanted) {
    if (std::none_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name; })) {
      std::fprintf(stderr, "unknown check %s\n", name.c_str());
      return 2;
    }
  }

  int failures = 0;
  for (const auto& check : checks) {
    if (!wanted.empty() && !wanted.count(check.name)) continue;
    const auto wall0 = std::chrono::steady_clock::now();
    const std::clock_t cpu0 = std::clock();
    Outcome outcome;
    try {
      outcome = check.body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    const double cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
    const double measured = check.cpu_limit ? cpu : wall;
    const bool in_time = measured < check.limit_seconds;
    const bool pass = outcome.pass && in_time;
    failures += !pass;
    std::printf("%s %s %s: %s; %s %.2fs (limit %.0fs%s)\n", pass ? "PASS" : "FAIL", check.name.c_str(),
                check.title.c_str(), outcome.detail.c_str(), check.cpu_limit ? "cpu" : "wall", measured,
                check.limit_seconds, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
