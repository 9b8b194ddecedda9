#include <benchmark/benchmark.h>

#include "dmft_sgd/analytic_maps.hpp"
#include "dmft_sgd/fixed_point.hpp"
#include "dmft_sgd/highdim.hpp"
#include "dmft_sgd/resolvent.hpp"
#include "dmft_sgd/trajectory.hpp"

using namespace dmft_sgd;

namespace {

ModelSpec linear_spec() {
    return single_index_spec(Activation::Linear, Loss{}, TeacherKind::Identity, 0.8, 0.8, 0.1);
}

DMFTState fixed_point(double T, double delta) {
    SolveOptions so;
    return solve(linear_spec(), TimeGrid::make(T, delta), so).state;
}

void BM_Resolvent(benchmark::State& state) {
    const auto N = static_cast<double>(state.range(0));
    const TimeGrid g = TimeGrid::make(4.0, 4.0 / N);
    TwoTimeKernel A(g, 1, 1, KernelKind::Response);
    for (std::size_t t = 0; t < g.points(); ++t)
        for (std::size_t s = 0; s < t; ++s) A(t, s) = -0.5;
    for (auto _ : state) benchmark::DoNotOptimize(volterra_resolvent(A));
}
BENCHMARK(BM_Resolvent)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_LinearMap(benchmark::State& state) {
    const DMFTState st = fixed_point(4.0, 4.0 / static_cast<double>(state.range(0)));
    const ModelSpec spec = linear_spec();
    for (auto _ : state) benchmark::DoNotOptimize(linear_map(st.theta, spec));
}
BENCHMARK(BM_LinearMap)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_XiSampler(benchmark::State& state) {
    ModelSpec spec = single_index_spec(Activation::Tanh, Loss{LossKind::Huber, 1.0}, TeacherKind::TanhNoisy, 0.8, 3.0,
                                       0.1, 0.1);
    spec.driver = state.range(1) ? Driver::Gaussian : Driver::Poisson;
    const DMFTState st = fixed_point(4.0, 4.0 / static_cast<double>(state.range(0)));
    const XiSampler sampler(st.theta, spec);
    auto work = sampler.make_work(true);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        sampler.run(seed++, work, true);
        benchmark::DoNotOptimize(work.xi.data());
    }
}
BENCHMARK(BM_XiSampler)->Args({80, 0})->Args({80, 1})->Unit(benchmark::kMicrosecond);

void BM_SgdEpoch(benchmark::State& state) {
    SimConfig c;
    c.n = static_cast<std::size_t>(state.range(0));
    c.d = c.n * 5 / 4;
    c.kappa = 1;
    c.grid = TimeGrid::make(1.0, 0.5);
    const ModelSpec spec = linear_spec();
    const Dataset ds = generate_dataset(c, spec, 1);
    for (auto _ : state) benchmark::DoNotOptimize(run_sgd(ds, c, spec, 2));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.n));  // one epoch of updates
}
BENCHMARK(BM_SgdEpoch)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
