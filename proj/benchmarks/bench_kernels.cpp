// Microbenchmarks of the hot paths: counter-based noise generation, the
// coupled integrator, and frozen-equation estimation.

#include <benchmark/benchmark.h>

#include "slowfast/averaging.hpp"
#include "slowfast/frozen.hpp"
#include "slowfast/kernel.hpp"
#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"

namespace {

using namespace slowfast;

void BM_noise_gaussian(benchmark::State& state) {
    NoiseBundle noise(1, 0, Dims{1, 1, 1, 1}, 1e-3, 1e-5);
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(noise.standard_gaussian(NoiseStream::FastW2, 0, i++));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_noise_gaussian);

void BM_w2_increment(benchmark::State& state) {
    NoiseBundle noise(1, 0, Dims{1, 1, 1, 1}, 1e-3, 1e-5);
    Vec dw(1);
    std::uint64_t step = 0;
    for (auto _ : state) {
        noise.w2_increment(step++, dw);
        benchmark::DoNotOptimize(dw);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_w2_increment);

void BM_coupled_step_model2(benchmark::State& state) {
    const CoefficientSystem sys = make_model2(0.0);
    const double eps = 1e-2;
    CoupledOptions opt;
    opt.T = 0.01; // 10 slow steps per iteration
    opt.slow = {SchemeKind::TamedEM, 1e-3};
    opt.fast = {SchemeKind::TamedEM, eps * 1e-3 / 10.0};
    Vec x0 = Vec::Constant(1, 1.0), y0 = Vec::Constant(1, 1.0);
    std::uint64_t path = 0;
    for (auto _ : state) {
        NoiseBundle noise(7, path++, sys.dims, opt.slow.h, opt.fast.h);
        benchmark::DoNotOptimize(simulate_coupled(sys, eps, x0, y0, opt, noise));
    }
    // fast sub-steps dominate: slow_steps * substeps per iteration
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 10 * 1000);
}
BENCHMARK(BM_coupled_step_model2);

void BM_estimate_bbar_model2(benchmark::State& state) {
    const CoefficientSystem sys = make_model2(0.0);
    EstimateOpts opts;
    opts.burn_in = 1.0;
    opts.sample_time = 5.0;
    opts.n_chains = 2;
    opts.scheme = {SchemeKind::TamedEM, 1e-3};
    Vec x = Vec::Constant(1, 1.0), y0 = Vec::Zero(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_bbar(sys, 1.0, x, y0, opts));
    }
}
BENCHMARK(BM_estimate_bbar_model2);

} // namespace

BENCHMARK_MAIN();
