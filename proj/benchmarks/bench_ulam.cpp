#include "metamap/metastability.hpp"
#include "metamap/scenario.hpp"
#include "metamap/spectral.hpp"
#include "metamap/transfer_operator.hpp"

#include <benchmark/benchmark.h>

using namespace metamap;

namespace {

const PerturbationFamily& family() {
    static const Scenario s = builtin_scenario("family_a");
    return *s.family;
}

void BM_BuildUlam(benchmark::State& state) {
    const auto map = family().instantiate(0.01);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_ulam(map, n));
}
BENCHMARK(BM_BuildUlam)->Arg(960)->Arg(3840)->Unit(benchmark::kMillisecond);

void BM_ApplyTransfer(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = build_ulam(family().instantiate(0.01), n);
    DensityGrid d = DensityGrid::uniform(n);
    for (auto _ : state) {
        d = apply_transfer(p, d);
        benchmark::DoNotOptimize(d.values().data());
    }
}
BENCHMARK(BM_ApplyTransfer)->Arg(960)->Arg(3840)->Unit(benchmark::kMicrosecond);

void BM_InvariantDensity(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = build_ulam(family().instantiate(0.01), n);
    for (auto _ : state) benchmark::DoNotOptimize(invariant_density(p));
}
BENCHMARK(BM_InvariantDensity)->Arg(3840)->Unit(benchmark::kMillisecond);

void BM_SecondEigenpair(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = build_ulam(family().instantiate(0.01), n);
    const auto phi = invariant_density(p).phi;
    for (auto _ : state) benchmark::DoNotOptimize(second_eigenpair(p, phi, Interval{0.0, 0.5}));
}
BENCHMARK(BM_SecondEigenpair)->Arg(3840)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
    StudyOptions opt;
    opt.lebesgue_halves = true;
    for (auto _ : state)
        benchmark::DoNotOptimize(convergence_study(family(), {0.02, 0.01, 0.005, 0.0025}, 3840, opt));
}
BENCHMARK(BM_Sweep)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
