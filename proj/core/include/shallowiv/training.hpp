#pragma once

// Losses, Adam and the mini-batch training loop for the volatility network.
//
// Total loss on a set of points D:
//   L = L_P + L_C + L_V + L_B
//   L_P = sqrt( mean_D (o_hat - o)^2 / w(v_hat) )       w = v or v^2
//   L_X = sqrt( mean_D eps_X^2 ),  X in {C, V, B}
// with o_hat the Black-Scholes OTM price at omega_hat and v_hat its vega.
// The density loss L_D is diagnostic only and never enters the gradient.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "shallowiv/market.hpp"
#include "shallowiv/neural.hpp"

namespace shallowiv::training {

enum class VegaWeight {
    PaperLiteral,  // 1 / v_hat
    Squared,       // 1 / v_hat^2, implied-volatility RMSE to first order
};

std::string_view to_string(VegaWeight mode);
std::optional<VegaWeight> parse_vega_weight(std::string_view name);

struct TrainConfig {
    int epochs = 1000;
    int batch_size = 256;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-16;
    std::uint64_t seed = 0;
    VegaWeight vega_weight = VegaWeight::PaperLiteral;
    double vega_floor = 1e-8;
    /// Full training-set losses (with density) every this many epochs; 0 disables.
    int snapshot_every = 10;
};

struct LossBreakdown {
    double price = 0.0;
    double calendar = 0.0;
    double vertical = 0.0;
    double butterfly = 0.0;
    std::optional<double> density;

    double total() const { return price + calendar + vertical + butterfly; }
    bool arbitrage_free() const { return calendar == 0.0 && vertical == 0.0 && butterfly == 0.0; }
};

struct ArbitrageLosses {
    double calendar;
    double vertical;
    double butterfly;
};

using Points = std::span<const market::RelativeQuote>;

double price_loss(const neural::VolNetwork& net, Points points, VegaWeight mode, double vega_floor = 1e-8);
ArbitrageLosses arbitrage_losses(const neural::VolNetwork& net, Points points);

/// sqrt( (1/|T|) sum_{tau,kappa} (psi_hat - psi_LB)^2 dkappa ) over a uniform grid.
double density_loss(const neural::VolNetwork& net, const market::ChainDataset& grid,
                    const market::LbTermStructure& market);

/// Price and arbitrage losses (and density when a market is given).
LossBreakdown evaluate(const neural::VolNetwork& net, const market::ChainDataset& data, const TrainConfig& config,
                       const market::LbTermStructure* market = nullptr);

struct LossAndGradient {
    LossBreakdown losses;
    neural::LayerStack gradient;  // d(total)/d(parameters)
};

LossAndGradient loss_and_gradient(const neural::VolNetwork& net, Points points, const TrainConfig& config);

// ---------------------------------------------------------------------------

struct AdamState {
    neural::LayerStack first;
    neural::LayerStack second;
    long step = 0;

    static AdamState zeros_for(const neural::VolNetwork& net);
};

/// Bias-corrected Adam; epsilon is added to sqrt of the second-moment estimate.
void adam_step(neural::LayerStack& params, const neural::LayerStack& grad, AdamState& state,
               const TrainConfig& config);

/// Reshuffle [0, n) with the given seed and cut it into consecutive batches.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

/// Shuffle seed of an epoch, derived from the master seed.
std::uint64_t epoch_seed(std::uint64_t master, int epoch);

struct EpochRecord {
    int epoch = 0;            // 1-based
    LossBreakdown losses;     // simple average of the per-batch losses
    std::optional<double> density;  // training-set density loss on snapshot epochs
    double seconds = 0.0;
};

struct Snapshot {
    int epoch = 0;
    LossBreakdown train;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::vector<Snapshot> snapshots;

    /// First epoch from which every later epoch-wise arbitrage loss is exactly zero.
    std::optional<int> arbitrage_zero_epoch() const;
};

struct TrainResult {
    neural::VolNetwork net;
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&, const neural::VolNetwork&)>;

/// Mini-batch Adam over the training set; one step per batch. Epoch e uses
/// shuffle seed epoch_seed(config.seed, e).
TrainResult train(neural::VolNetwork initial, const TrainConfig& config, const market::ChainDataset& train_set,
                  const market::LbTermStructure* market = nullptr, const EpochCallback& on_epoch = {});

/// Convenience: He-uniform initialization with config.seed, then train.
TrainResult train(const neural::NetworkConfig& arch, const TrainConfig& config,
                  const market::ChainDataset& train_set, const market::LbTermStructure* market = nullptr,
                  const EpochCallback& on_epoch = {});

} // namespace shallowiv::training
