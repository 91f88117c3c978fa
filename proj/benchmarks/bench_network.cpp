#include <benchmark/benchmark.h>

#include "shallowiv/market.hpp"
#include "shallowiv/neural.hpp"
#include "shallowiv/training.hpp"

using namespace shallowiv;

namespace {

const char* kModels[] = {"relu2-128x1", "relu-64x3", "tanh-128x3"};

std::vector<market::RelativeQuote> batch(std::size_t n) {
    const auto d = market::generate_dataset(market::GridSpec::training(), market::LbTermStructure{});
    return {d.quotes().begin(), d.quotes().begin() + static_cast<long>(n)};
}

} // namespace

static void BM_ForwardJet(benchmark::State& state) {
    const auto net = neural::he_uniform_init(*neural::NetworkConfig::parse_name(kModels[state.range(0)]), 1);
    const auto pts = batch(256);
    std::vector<double> tau, kappa;
    for (const auto& p : pts) {
        tau.push_back(p.tau);
        kappa.push_back(p.kappa);
    }
    for (auto _ : state) benchmark::DoNotOptimize(neural::forward_jet(net, tau, kappa, false));
    state.SetLabel(kModels[state.range(0)]);
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ForwardJet)->DenseRange(0, 2);

static void BM_LossAndGradient(benchmark::State& state) {
    const auto net = neural::he_uniform_init(*neural::NetworkConfig::parse_name(kModels[state.range(0)]), 1);
    const auto pts = batch(256);
    const training::TrainConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(training::loss_and_gradient(net, pts, cfg));
    state.SetLabel(kModels[state.range(0)]);
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_LossAndGradient)->DenseRange(0, 2);

static void BM_TrainingEpoch(benchmark::State& state) {
    const auto arch = *neural::NetworkConfig::parse_name(kModels[state.range(0)]);
    const auto data = market::generate_dataset(market::GridSpec::training(), market::LbTermStructure{});
    training::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.snapshot_every = 0;
    for (auto _ : state) benchmark::DoNotOptimize(training::train(arch, cfg, data));
    state.SetLabel(kModels[state.range(0)]);
}
BENCHMARK(BM_TrainingEpoch)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
