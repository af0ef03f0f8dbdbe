// Microbenchmarks for the per-iteration hot paths at the default desk scale.

#include <benchmark/benchmark.h>

#include "activedpo/config.hpp"
#include "activedpo/design_state.hpp"
#include "activedpo/env.hpp"
#include "activedpo/harness.hpp"
#include "activedpo/projector.hpp"
#include "activedpo/rng.hpp"
#include "activedpo/selection.hpp"

namespace activedpo {
namespace {

Eigen::VectorXd gaussian(RngStream& s, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = s.normal();
  return v;
}

// A runner built from the default config gives realistic model sizes and a
// candidate pool without duplicating the setup logic here.
struct Fixture {
  RunConfig config;
  Runner runner{config};
  CandidatePool pool = build_pool(runner.base_policy(), prompts_for_iteration(runner.prompts().train,
                                  config.data.prompts_per_iteration, config.seeds.generation, 1),
                                  config.data.m_pairs, RngStream(config.seeds.generation, "bench"), 0, 1);
  Projector projector{config.seeds.projection, static_cast<std::size_t>(runner.base_policy().theta().size()),
                      config.selection.proj_dim};

  static Fixture& get() {
    static Fixture f;
    return f;
  }
};

void BM_RewardAndGrad(benchmark::State& state) {
  auto& f = Fixture::get();
  const Triplet& t = f.pool.triplets.front();
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(f.runner.base_policy().reward_and_grad(t.prompt, t.response_a, grad));
}
BENCHMARK(BM_RewardAndGrad);

void BM_Projection(benchmark::State& state) {
  auto& f = Fixture::get();
  RngStream s(1, "bench-projection");
  const Eigen::VectorXd g = gaussian(s, static_cast<Eigen::Index>(f.projector.ambient_dim()));
  for (auto _ : state) benchmark::DoNotOptimize(f.projector.project(g));
  state.counters["ambient"] = static_cast<double>(f.projector.ambient_dim());
}
BENCHMARK(BM_Projection);

void BM_PoolFeatures(benchmark::State& state) {
  auto& f = Fixture::get();
  for (auto _ : state)
    benchmark::DoNotOptimize(compute_features(f.runner.base_policy(), f.pool.triplets, f.projector, true, {}, 0));
  state.counters["triplets"] = static_cast<double>(f.pool.triplets.size());
}
BENCHMARK(BM_PoolFeatures)->Unit(benchmark::kMillisecond);

void BM_Absorb(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream s(2, "bench-absorb");
  const Eigen::VectorXd phi = gaussian(s, d);
  DesignState design(d, 1.0, 0.25);
  for (auto _ : state) design.absorb(phi);
}
BENCHMARK(BM_Absorb)->Arg(16)->Arg(64)->Arg(256);

void BM_SelectGreedy(benchmark::State& state) {
  const int d = 64, n = static_cast<int>(state.range(0)), batch = 25;
  RngStream s(3, "bench-select");
  std::vector<GradientFeature> pool(n);
  for (int i = 0; i < n; ++i) {
    pool[i].triplet_id = static_cast<TripletId>(i);
    pool[i].phi = gaussian(s, d);
  }
  for (auto _ : state) {
    DesignState design(d, 1.0, 0.25);
    benchmark::DoNotOptimize(select_greedy(pool, design, batch));
  }
}
BENCHMARK(BM_SelectGreedy)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

// One full simulated iteration: pool, features, selection, labels, training
// and evaluation.
void BM_Iteration(benchmark::State& state) {
  const RunConfig config;
  for (auto _ : state) {
    state.PauseTiming();
    Runner runner(config);
    state.ResumeTiming();
    benchmark::DoNotOptimize(runner.step());
  }
}
BENCHMARK(BM_Iteration)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace activedpo

BENCHMARK_MAIN();
