#pragma once

// Experiment orchestration behind the command-line driver.
//
// Every command is deterministic given its inputs and seeds. Wall-clock
// times go to log files only, unless timing columns are requested.
//
// Run directory layout written by train_model:
//   model.bin     checkpoint
//   history.csv   epoch-wise losses
//   summary.csv   final losses on the training (and validation) set
//   run.cfg       resolved model and training settings
//   market.cfg    market and grid settings used for density losses
//   train.log     progress and wall-clock times

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shallowiv/io.hpp"
#include "shallowiv/market.hpp"
#include "shallowiv/neural.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/training.hpp"

namespace shallowiv::harness {

enum ExitCode : int {
    kOk = 0,
    kIoError = 1,
    kInvalidConfig = 2,
    kToleranceFailure = 3,
    kNumericAbort = 4,
};

/// Runs fn and maps library exceptions to exit codes, printing the message to err.
int guarded(const std::function<int()>& fn, std::ostream& err);

/// Final epoch-wise total loss above this (1000 bps) marks a run as not converged.
inline constexpr double kConvergenceThreshold = 0.1;

// ---------------------------------------------------------------------------
// Market and grid configuration

struct MarketConfig {
    market::LbTermStructure market;
    market::GridSpec train = market::GridSpec::training();
    market::GridSpec valid = market::GridSpec::validation();
};

/// Market keys plus train_/valid_ grid keys: {train,valid}_{tau,kappa}_{lo,hi,step}.
MarketConfig market_config_from(const io::KeyValues& kv);
MarketConfig load_market_config(const std::optional<std::filesystem::path>& path);
void write_market_config(std::ostream& out, const MarketConfig& cfg);

/// Throws ModelInvalidError naming every violated condition over both tenor grids.
void require_admissible(const MarketConfig& cfg);

// ---------------------------------------------------------------------------
// generate

struct GenerateResult {
    std::size_t train_rows = 0;
    std::size_t valid_rows = 0;
};

GenerateResult generate(const MarketConfig& cfg, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// train

struct ModelSpec {
    neural::NetworkConfig arch;
    training::TrainConfig config;
};

/// Keys: model (e.g. relu2-128x1) or activation/width/depth, seed, epochs,
/// batch_size, learning_rate, beta1, beta2, epsilon, vega_weight, vega_floor,
/// snapshot_every.
void apply_model_keys(const io::KeyValues& kv, ModelSpec& spec);
void write_model_spec(std::ostream& out, const ModelSpec& spec);

struct RunSummary {
    std::string model;
    std::uint64_t seed = 0;
    training::LossBreakdown train;
    std::optional<training::LossBreakdown> valid;
    std::size_t train_points = 0;
    std::size_t valid_points = 0;
    std::optional<int> arbitrage_zero_epoch;
    double final_epoch_loss = 0.0;
    bool converged = false;
    double seconds = 0.0;
};

struct TrainOptions {
    bool timing = false;           // fill the seconds column of history.csv
    std::ostream* progress = nullptr;
};

/// Trains one model from He-uniform initialization and writes a run directory.
RunSummary train_model(const ModelSpec& spec, const market::ChainDataset& train_set,
                       const market::ChainDataset* valid_set, const MarketConfig& market,
                       const std::filesystem::path& out_dir, const TrainOptions& options);

void write_summary_csv(std::ostream& out, const RunSummary& summary);

// ---------------------------------------------------------------------------
// sweep

struct SweepSpec {
    std::vector<neural::Activation> activations{neural::Activation::ReLU, neural::Activation::ReLU2,
                                                neural::Activation::ReLU3, neural::Activation::ELU,
                                                neural::Activation::Tanh};
    std::vector<int> widths{32, 64, 128};
    std::vector<int> depths{1, 2, 3};
    training::TrainConfig config;  // seed is the master seed

    /// Full cross product, activation-major.
    std::vector<neural::NetworkConfig> models() const;
    /// Models whose names appear in subset, in cross-product order. Throws
    /// ModelInvalidError for a name outside the cross product.
    std::vector<neural::NetworkConfig> select(const std::vector<std::string>& subset) const;
    std::uint64_t model_seed(const neural::NetworkConfig& model) const;
};

struct SweepRow {
    neural::NetworkConfig model;
    std::string status;  // ok, numeric_abort, error
    std::string message;
    RunSummary summary;
};

struct SweepOptions {
    std::optional<std::vector<std::string>> subset;
    int jobs = 1;
    bool timing = false;
    std::ostream* progress = nullptr;
};

std::vector<SweepRow> sweep(const SweepSpec& spec, const market::ChainDataset& train_set,
                            const market::ChainDataset* valid_set, const MarketConfig& market,
                            const std::filesystem::path& out_dir, const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_seconds);

// ---------------------------------------------------------------------------
// audit

struct AuditResult {
    parity::AuditReport report;
    bool within_tolerance = false;
};

/// Tolerance applies to the pdf, cdf and calendar identities; skipped points fail.
AuditResult audit(const market::PricingModel& model, const parity::AuditOptions& options, double tolerance);

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
    bool validation_grid = true;  // surface grid; training grid otherwise
};

/// Writes learning_curve_<run>.csv, surface_<run>.csv and scatter.csv into out_dir.
void report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir,
            const ReportOptions& options, std::ostream* progress = nullptr);

} // namespace shallowiv::harness
