#include <benchmark/benchmark.h>

#include "nlh/power_lab.hpp"

using namespace nlh;

namespace {

Scenario calibration(std::size_t n) {
  Scenario sc;
  sc.truth = {exponential_model(), Vector::Constant(1, 1.0), 0.0};
  sc.censoring = CensoringSpec::exponential(1.0);
  sc.n = n;
  sc.flavors = {VarianceFlavor::Parametric, VarianceFlavor::Nonparametric};
  return sc;
}

void run(benchmark::State& state, ExecutionPolicy policy) {
  const Scenario sc = calibration(static_cast<std::size_t>(state.range(0)));
  const auto reps = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto m = mc_study(sc, reps, 11, policy);
    benchmark::DoNotOptimize(m.series.front().band_exceedance);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * reps));
}

void BM_McStudySerial(benchmark::State& state) { run(state, ExecutionPolicy::Serial); }
void BM_McStudyOpenMP(benchmark::State& state) { run(state, ExecutionPolicy::OpenMP); }

}  // namespace

BENCHMARK(BM_McStudySerial)->Args({100, 200})->Args({1000, 50})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_McStudyOpenMP)->Args({100, 200})->Args({1000, 50})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
