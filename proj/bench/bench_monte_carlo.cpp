// Serial reference vs the OpenMP fan-out on a shortened default scenario.

#include <benchmark/benchmark.h>

#include "anfekf/scenario_io.hpp"
#include "anfekf/simulator.hpp"

namespace {

anfekf::Scenario short_scenario() {
    anfekf::Scenario s = anfekf::default_scenario();
    s.duration = 30.0;
    return s;
}

constexpr int kRuns = 16;

void BM_Serial(benchmark::State& state) {
    const auto scenario = short_scenario();
    for (auto _ : state) {
        auto logs = anfekf::run_monte_carlo_serial(scenario, anfekf::Variant::AnfekfRQ, kRuns, 1);
        benchmark::DoNotOptimize(logs.data());
    }
    state.SetItemsProcessed(state.iterations() * kRuns);
}
BENCHMARK(BM_Serial)->Unit(benchmark::kMillisecond);

void BM_Parallel(benchmark::State& state) {
    const auto scenario = short_scenario();
    anfekf::MonteCarloOptions opts;
    opts.threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto logs = anfekf::run_monte_carlo(scenario, anfekf::Variant::AnfekfRQ, kRuns, 1, opts);
        benchmark::DoNotOptimize(logs.data());
    }
    state.SetItemsProcessed(state.iterations() * kRuns);
}
BENCHMARK(BM_Parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
