#include <benchmark/benchmark.h>

#include "survcart/simlab.hpp"
#include "survcart/split.hpp"
#include "survcart/stability.hpp"
#include "survcart/tree.hpp"

using namespace survcart;

namespace {

SimulatedTreeData tree_data(std::size_t per_group) {
  TreeDesign d;
  for (auto& g : d.subgroups) g.n = per_group;
  Philox4x32 rng(1);
  return simulate_tree_data(d, rng);
}

void BM_VariableTestContinuous(benchmark::State& state) {
  const auto sim = tree_data(static_cast<std::size_t>(state.range(0)) / 4);
  const auto ef = try_fit(Family::Weibull, Component::Event, sim.data);
  const auto cf = try_fit(Family::Exponential, Component::Censor, sim.data);
  for (auto _ : state) benchmark::DoNotOptimize(variable_test(sim.data, "X2", ef, cf));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VariableTestContinuous)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_BestSplit(benchmark::State& state) {
  const auto sim = tree_data(static_cast<std::size_t>(state.range(0)) / 4);
  for (auto _ : state) benchmark::DoNotOptimize(best_split(sim.data, "X4", Component::Event, 7));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BestSplit)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_Grow(benchmark::State& state) {
  const auto sim = tree_data(static_cast<std::size_t>(state.range(0)) / 4);
  for (auto _ : state) benchmark::DoNotOptimize(grow(sim.data, {}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Grow)->RangeMultiplier(2)->Range(400, 6400)->Unit(benchmark::kMillisecond);

void BM_SizeReplicates(benchmark::State& state) {
  SizeDesign d;
  d.n = 1000;
  d.replicates = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_size(d, {1}));
}
BENCHMARK(BM_SizeReplicates)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
