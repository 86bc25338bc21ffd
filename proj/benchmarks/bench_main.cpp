#include <benchmark/benchmark.h>

#include "qpgamma/gamma_transport.hpp"
#include "qpgamma/hmm.hpp"
#include "qpgamma/masking.hpp"
#include "qpgamma/psd.hpp"
#include "qpgamma/timeseries.hpp"
#include "qpgamma/tomography.hpp"
#include "qpgamma/weighting_potential.hpp"

using namespace qpgamma;

namespace {

const ParityTrace& parity_trace()
{
    static const ParityTrace tr = [] {
        ParitySettings ps;
        ps.samples = 1 << 20;
        RandomStream r(3);
        return synth_parity_trace(ps, {}, r);
    }();
    return tr;
}

const InducedChargeTable& table()
{
    static const InducedChargeTable t =
        cached_weighting_potential(default_config().geometry, GridSpec{}, QPGAMMA_BENCH_TABLE_CACHE);
    return t;
}

}  // namespace

static void BM_DecayBatch(benchmark::State& state)
{
    BatchOptions bo;
    bo.bias_cone_fraction = 0.99;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_decay_batch(default_config(), state.range(0), bo));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecayBatch)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Psd(benchmark::State& state)
{
    const auto& tr = parity_trace();
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_lorentzian(compute_psd(tr.samples, tr.dt, state.range(0))));
    state.SetItemsProcessed(state.iterations() * tr.samples.size());
}
BENCHMARK(BM_Psd)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

static void BM_MaskAndHmm(benchmark::State& state)
{
    const auto& tr = parity_trace();
    for (auto _ : state) {
        const auto mask = mask_trace(tr.samples, 10.0, tr.dt, tr.fidelity);
        benchmark::DoNotOptimize(hmm_decode(tr.samples, mask, tr.dt));
    }
    state.SetItemsProcessed(state.iterations() * tr.samples.size());
}
BENCHMARK(BM_MaskAndHmm)->Unit(benchmark::kMillisecond);

static void BM_StepDetection(benchmark::State& state)
{
    SingleShotSettings s;
    s.samples = 1000000;
    std::vector<std::size_t> idx;
    std::vector<double> raw;
    for (std::size_t k = 3000; k < s.samples; k += 4000) {
        idx.push_back(k);
        raw.push_back(k % 8000 ? 0.3 : -0.3);
    }
    RandomStream r(5);
    const auto series = synth_singleshot_series(s, idx, raw, r);
    for (auto _ : state)
        benchmark::DoNotOptimize(detect_steps_singleshot(series));
    state.SetItemsProcessed(state.iterations() * s.samples);
}
BENCHMARK(BM_StepDetection)->Unit(benchmark::kMillisecond);

static void BM_TableLookup(benchmark::State& state)
{
    const auto& t = table();
    RandomStream r(9);
    const double depth = t.zs().front();
    for (auto _ : state) {
        const double x = (r.uniform() - 0.5) * 5e-3, y = (r.uniform() - 0.5) * 5e-3, z = depth * r.uniform();
        benchmark::DoNotOptimize(t.lookup(x, y, z));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TableLookup);
BENCHMARK_MAIN();
