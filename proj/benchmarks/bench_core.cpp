#include <benchmark/benchmark.h>

#include <vector>

#include "gqkd/analysis.hpp"
#include "gqkd/montecarlo.hpp"
#include "gqkd/timing.hpp"

using namespace gqkd;

static void BM_WindowCapture(benchmark::State& state) {
    const TimingResponse r{28.876941, 151.515, 303.0303};
    double offset = 100.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(window_capture(r, offset, 100.0));
        offset = offset > 150.0 ? 100.0 : offset + 0.1;
    }
}
BENCHMARK(BM_WindowCapture);

static void BM_TotalQber(benchmark::State& state) {
    SystemConfig c = sspd_3g3();
    c.channel.length_km = 20.0;
    for (auto _ : state) benchmark::DoNotOptimize(total_qber(c));
}
BENCHMARK(BM_TotalQber);

static void BM_SecurityThreshold(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(security_threshold(0.29));
}
BENCHMARK(BM_SecurityThreshold);

static void BM_SweepRow(benchmark::State& state) {
    const SystemConfig c = sspd_3g3();
    const std::vector<double> d{12.5};
    for (auto _ : state) benchmark::DoNotOptimize(sweep(c, d));
}
BENCHMARK(BM_SweepRow);

static void BM_OptimizeWindow(benchmark::State& state) {
    const TimingResponse r{28.876941, 151.515, 303.0303};
    const ClockConfig clock{3.3e9};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            optimize_window(r, 13.0, 2.0, clock, WindowObjective::max_nbr));
}
BENCHMARK(BM_OptimizeWindow);

static void BM_MonteCarloCycles(benchmark::State& state) {
    RunSpec spec;
    spec.config = state.range(0) == 0 ? sspd_3g3() : sispad_2g();
    spec.config.channel.length_km = 1.0;
    spec.cycles = 200'000;
    spec.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(run(spec));
    state.SetItemsProcessed(state.iterations() * spec.cycles);
}
BENCHMARK(BM_MonteCarloCycles)->Arg(0)->Arg(1);

static void BM_Calibrate(benchmark::State& state) {
    const SystemConfig base = sspd_3g3();
    const Observation obs{25.0, Observation::Kind::qber, 0.036};
    for (auto _ : state) benchmark::DoNotOptimize(calibrate(base, {&obs, 1}));
}
BENCHMARK(BM_Calibrate);

BENCHMARK_MAIN();
