// Serial reference vs OpenMP kernels. Use --benchmark_filter to pick one.
#include "wavecav/cavity.hpp"
#include "wavecav/readout.hpp"
#include "wavecav/ret.hpp"

#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

using namespace wavecav;

namespace {

ModalReservoir cavity()
{
    CavityConfig c;
    c.t_decay = 550e-12;
    return build_cavity(c, 1);
}

TimeSeries drive(const ModalReservoir& r, Index bins, Index per_bin)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix m(1, bins * per_bin);
    for (Index b = 0; b < bins; ++b) m.block(0, b * per_bin, 1, per_bin).setConstant(d(rng));
    return TimeSeries(m, 0.9 * std::numbers::pi / (10.0 * r.band_hi), {"u"});  // members may reach the band edge
}

void simulate_modes(benchmark::State& state, Execution exec)
{
    const auto r = cavity();
    const auto u = drive(r, 2000, 10);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_linear(r, u, exec));
    state.SetItemsProcessed(state.iterations() * u.samples() * r.n_modes());
}

void ensemble(benchmark::State& state, Execution exec)
{
    const auto r = cavity();
    const auto u = drive(r, 1000, 10);
    EnsembleSpec spec;
    spec.n_boundary = 8;
    spec.n_freq = 2;
    spec.seed = 3;
    const double t_bin = 10.0 * u.dt;
    for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(r, spec, u, t_bin, 1, -1, exec));
}

void gram(benchmark::State& state, bool parallel)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Matrix m(state.range(0), 4000);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    const ColumnRange cols{0, m.cols()};
    for (auto _ : state)
        benchmark::DoNotOptimize(parallel ? kernels::gram_parallel(m, cols) : kernels::gram_serial(m, cols));
}

}  // namespace

BENCHMARK_CAPTURE(simulate_modes, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(simulate_modes, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gram, serial, false)->Arg(91)->Arg(361)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gram, parallel, true)->Arg(91)->Arg(361)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
