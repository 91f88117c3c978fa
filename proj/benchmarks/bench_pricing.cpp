#include <benchmark/benchmark.h>

#include "shallowiv/market.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/special.hpp"

using namespace shallowiv;

static void BM_RegIncBeta(benchmark::State& state) {
    double x = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(special::reg_inc_beta(x, 0.57, 1.15));
        x = x > 0.98 ? 0.01 : x + 0.013;
    }
}
BENCHMARK(BM_RegIncBeta);

static void BM_Polygamma(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(special::polygamma(n, 1.15));
}
BENCHMARK(BM_Polygamma)->DenseRange(0, 3);

static void BM_LbPrice(benchmark::State& state) {
    const auto m = market::term_structure_eval(1.0, market::LbTermStructure{});
    double k = -1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(market::lb_price(k, m));
        k = k > 1.0 ? -1.0 : k + 0.01;
    }
}
BENCHMARK(BM_LbPrice);

static void BM_ImpliedTotalVol(benchmark::State& state) {
    const double p = market::bs_otm(1.0, -0.2, 0.18);
    for (auto _ : state) benchmark::DoNotOptimize(market::implied_total_vol(1.0, -0.2, p));
}
BENCHMARK(BM_ImpliedTotalVol);

static void BM_GenerateTrainingSet(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(market::generate_dataset(market::GridSpec::training(), market::LbTermStructure{}));
    }
}
BENCHMARK(BM_GenerateTrainingSet)->Unit(benchmark::kMillisecond);

static void BM_ParityAudit(benchmark::State& state) {
    parity::AuditOptions o;
    o.tenors = {1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(parity::parity_audit(market::LbMarket{market::LbTermStructure{}}, o));
    }
}
BENCHMARK(BM_ParityAudit)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
