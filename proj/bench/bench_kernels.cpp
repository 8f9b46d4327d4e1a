#include <cmath>

#include <benchmark/benchmark.h>

#include "rpv/pi0.hpp"
#include "rpv/reference.hpp"
#include "rpv/simkit.hpp"
#include "rpv/tuning.hpp"

using namespace rpv;

namespace {

ModelSpec fig3() {
    const double r = std::sqrt(50.0);
    return ModelSpec(ZTestsModel{50}, {{700, -1.0 / r}, {300, 2.5 / r}});
}

const std::vector<double>& fine_grid() {
    static const auto grid = make_grid(0.0, 0.0001, 1.0);
    return grid;
}

const PValueVector& sample() {
    static const PValueVector p = [] {
        RngStream rng(1, 0);
        return gen_lfc_pvalues(fig3(), rng);
    }();
    return p;
}

SimulationPlan plan() {
    return SimulationPlan{.spec = fig3(),
                          .lambda = 0.5,
                          .c_grid = make_grid(0.0, 0.05, 1.0),
                          .replicates = 200,
                          .seed = 3,
                          .variant = EstimatorVariant::plain};
}

void BM_HCurve(benchmark::State& state) {
    const auto pop = fig3().population();
    for (auto _ : state) benchmark::DoNotOptimize(h_curve(pop, 0.5, fine_grid()));
}

void BM_HCurveReference(benchmark::State& state) {
    const auto pop = fig3().population();
    for (auto _ : state) benchmark::DoNotOptimize(reference::h_curve(pop, 0.5, fine_grid()));
}

void BM_SelectC0(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(select_c0(sample(), 0.5));
}

void BM_SelectC0Reference(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(reference::select_c0(sample(), 0.5));
}

void BM_McEstimates(benchmark::State& state) {
    const auto p = plan();
    for (auto _ : state) benchmark::DoNotOptimize(mc_estimates(p));
}

void BM_McEstimatesReference(benchmark::State& state) {
    const auto p = plan();
    for (auto _ : state) benchmark::DoNotOptimize(reference::mc_estimates(p));
}

} // namespace

BENCHMARK(BM_HCurve)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HCurveReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SelectC0)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SelectC0Reference)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_McEstimates)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McEstimatesReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
