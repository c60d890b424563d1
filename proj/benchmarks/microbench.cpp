#include <benchmark/benchmark.h>

#include <map>
#include <optional>

#include "rootsrc/root_prob.hpp"
#include "rootsrc/simulator.hpp"
#include "rootsrc/vem.hpp"

using namespace rootsrc;

namespace {

const Simulation& synthetic(std::size_t target) {
  static std::map<std::size_t, Simulation> cache;
  auto it = cache.find(target);
  if (it == cache.end()) {
    it = cache.emplace(target, simulate(synthetic_config(synthetic_horizon(target), 1, 1))).first;
  }
  return it->second;
}

std::optional<double> window_arg(const benchmark::State& state) {
  return state.range(1) ? std::optional<double>(20.0) : std::nullopt;
}

void BM_EStep(benchmark::State& state) {
  const auto& sim = synthetic(static_cast<std::size_t>(state.range(0)));
  const ModelParams params = synthetic_config(1.0, 1, 1).params;
  const auto window = window_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(update_eta(sim.events, params, window));
  state.counters["events"] = static_cast<double>(sim.events.size());
}

void BM_Sweep(benchmark::State& state) {
  const auto& sim = synthetic(static_cast<std::size_t>(state.range(0)));
  const PriorConfig prior = PriorConfig::maximum_likelihood(5);
  FitOptions options;
  options.nu = 10.0;
  options.tol = 0.0;
  options.max_iters = 1;
  options.truncate_window = window_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit(sim.events, prior, options));
}

void BM_RootProb(benchmark::State& state) {
  const auto& sim = synthetic(static_cast<std::size_t>(state.range(0)));
  const ModelParams params = synthetic_config(1.0, 1, 1).params;
  const RootProbOptions options{RootProbMode::full, window_arg(state)};
  for (auto _ : state) benchmark::DoNotOptimize(root_probabilities(sim.events, params, options));
}

}  // namespace

BENCHMARK(BM_EStep)->ArgsProduct({{1000, 4000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->ArgsProduct({{1000, 4000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RootProb)->ArgsProduct({{1000, 4000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
