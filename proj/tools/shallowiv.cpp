// Command-line driver: generate, train, sweep, audit, report.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shallowiv/errors.hpp"
#include "shallowiv/harness.hpp"
#include "shallowiv/io.hpp"

namespace fs = std::filesystem;
using namespace shallowiv;
using harness::ExitCode;

namespace {

// Training flags that override keys of a --config file.
struct ModelFlags {
    std::string model, activation, vega_weight;
    std::string width, depth, seed, epochs, batch_size, snapshot_every;
    std::string lr, beta1, beta2, epsilon, vega_floor;
    std::vector<std::pair<CLI::Option*, std::pair<std::string, std::string*>>> options;

    void add(CLI::App& app, bool with_model) {
        auto flag = [&](const std::string& name, const std::string& key, std::string& target, const std::string& help) {
            options.push_back({app.add_option(name, target, help), {key, &target}});
        };
        if (with_model) {
            flag("--model", "model", model, "Model name such as relu2-128x1");
            flag("--activation", "activation", activation, "Hidden activation: relu, relu2, relu3, elu, tanh");
            flag("--width", "width", width, "Hidden layer width");
            flag("--depth", "depth", depth, "Number of hidden layers");
            flag("--seed", "seed", seed, "Initialization and shuffle seed");
        } else {
            flag("--seed", "seed", seed, "Master seed; per-model seeds are derived from it and the model name");
        }
        flag("--epochs", "epochs", epochs, "Training epochs (default 1000)");
        flag("--batch-size", "batch_size", batch_size, "Mini-batch size (default 256)");
        flag("--lr", "learning_rate", lr, "Adam learning rate (default 1e-4)");
        flag("--beta1", "beta1", beta1, "Adam first-moment decay (default 0.9)");
        flag("--beta2", "beta2", beta2, "Adam second-moment decay (default 0.99)");
        flag("--epsilon", "epsilon", epsilon, "Adam epsilon (default 1e-16)");
        flag("--vega-weight", "vega_weight", vega_weight, "Price-loss weight: paper (1/vega) or squared (1/vega^2)");
        flag("--vega-floor", "vega_floor", vega_floor, "Lower bound on vega in the price weight (default 1e-8)");
        flag("--snapshot-every", "snapshot_every", snapshot_every,
             "Training-set density loss every N epochs, 0 disables (default 10)");
    }

    io::KeyValues merged(const std::string& config_path) const {
        io::KeyValues kv;
        if (!config_path.empty()) kv = io::load_key_values(config_path);
        for (const auto& [opt, binding] : options) {
            if (opt->count() > 0) kv[binding.first] = *binding.second;
        }
        return kv;
    }
};

std::optional<fs::path> optional_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

std::vector<std::string> split_names(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, item.find_last_not_of(' ') - b + 1));
    }
    return out;
}

void print_losses(const std::string& label, const training::LossBreakdown& l) {
    std::cout << label << ": total " << io::kBps * l.total() << " bps, price " << io::kBps * l.price
              << " bps, calendar " << io::kBps * l.calendar << " bps, vertical " << io::kBps * l.vertical
              << " bps, butterfly " << io::kBps * l.butterfly << " bps";
    if (l.density) std::cout << ", density " << io::kBps * *l.density << " bps";
    std::cout << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural implied-volatility surfaces with arbitrage-free density recovery"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write train.csv and valid.csv from a logistic-beta market");
    std::string gen_config, gen_out;
    gen->add_option("--config", gen_config,
                    "Market config (sigma0, h0, alpha0, alpha1, beta0, beta1 and "
                    "{train,valid}_{tau,kappa}_{lo,hi,step}); defaults to the reference market");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train one network and write a run directory");
    std::string tr_config, tr_market, tr_train, tr_valid, tr_out;
    bool tr_timing = false;
    ModelFlags tr_flags;
    tr->add_option("--config", tr_config, "Model and training config file; flags override its keys");
    tr->add_option("--market", tr_market, "Market config used for density losses; defaults to the reference market");
    tr->add_option("--train", tr_train, "Training dataset CSV")->required();
    tr->add_option("--valid", tr_valid, "Validation dataset CSV");
    tr->add_option("--out", tr_out, "Run directory")->required();
    tr->add_flag("--timing", tr_timing, "Record per-epoch wall-clock seconds in history.csv");
    tr_flags.add(*tr, true);

    // sweep
    auto* sw = app.add_subcommand("sweep", "Train the 45-model grid (or a subset)");
    std::string sw_config, sw_market, sw_train, sw_valid, sw_out, sw_subset;
    int sw_jobs = 1;
    bool sw_timing = false;
    ModelFlags sw_flags;
    sw->add_option("--config", sw_config, "Training config file; flags override its keys");
    sw->add_option("--market", sw_market, "Market config used for density losses");
    sw->add_option("--train", sw_train, "Training dataset CSV")->required();
    sw->add_option("--valid", sw_valid, "Validation dataset CSV");
    sw->add_option("--out", sw_out, "Output directory for sweep.csv and per-model runs")->required();
    auto* subset_opt = sw->add_option("--subset", sw_subset, "Comma-separated model names, e.g. relu2-128x1,tanh-64x2");
    sw->add_option("--jobs", sw_jobs, "Models trained concurrently")->check(CLI::PositiveNumber);
    sw->add_flag("--timing", sw_timing, "Record wall-clock seconds in CSV outputs");
    sw_flags.add(*sw, false);

    // audit
    auto* au = app.add_subcommand("audit", "Finite-difference audit of the implied density and distribution identities");
    std::string au_market, au_out;
    double au_flat = 0.0;
    parity::AuditOptions au_opts;
    double au_tol = 1e-3;
    au->add_option("--market", au_market, "Market config; defaults to the reference market");
    auto* flat_opt = au->add_option("--flat-bs", au_flat, "Audit a flat Black-Scholes market with this volatility");
    au->add_option("--tau", au_opts.tenors, "Tenors to audit (default 0.5 1 2)")->expected(1, -1);
    au->add_option("--kappa-lo", au_opts.kappa_lo, "Lowest moneyness (default -0.8)");
    au->add_option("--kappa-hi", au_opts.kappa_hi, "Highest moneyness (default 0.8)");
    au->add_option("--kappa-step", au_opts.kappa_step, "Moneyness step (default 0.01)");
    au->add_option("--fd-step", au_opts.fd_step, "Finite-difference step (default 1e-4)");
    au->add_option("--tol", au_tol, "Tolerance on the identity relative errors (default 1e-3)");
    au->add_option("--out", au_out, "Audit CSV path");

    // report
    auto* rp = app.add_subcommand("report", "Emit learning-curve, scatter and surface CSVs from run directories");
    std::vector<std::string> rp_runs;
    std::string rp_out, rp_grid = "validation";
    rp->add_option("runs", rp_runs, "Run directories written by train or sweep")->required()->expected(1, -1);
    rp->add_option("--out", rp_out, "Output directory")->required();
    rp->add_option("--grid", rp_grid, "Surface grid: validation or training")
        ->check(CLI::IsMember({"validation", "training"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ExitCode::kOk : ExitCode::kIoError;
    }

    return harness::guarded(
        [&]() -> int {
            if (*gen) {
                const auto cfg = harness::load_market_config(optional_path(gen_config));
                const auto r = harness::generate(cfg, gen_out);
                std::cout << "train rows: " << r.train_rows << '\n' << "valid rows: " << r.valid_rows << '\n';
                return ExitCode::kOk;
            }
            if (*tr) {
                harness::ModelSpec spec;
                harness::apply_model_keys(tr_flags.merged(tr_config), spec);
                const auto market = harness::load_market_config(optional_path(tr_market));
                harness::require_admissible(market);
                const auto train_set = io::load_dataset_csv(tr_train);
                std::optional<market::ChainDataset> valid_set;
                if (!tr_valid.empty()) valid_set = io::load_dataset_csv(tr_valid);
                const auto s = harness::train_model(spec, train_set, valid_set ? &*valid_set : nullptr, market, tr_out,
                                                    {tr_timing, &std::cerr});
                std::cout << "model " << s.model << ", seed " << s.seed << '\n';
                print_losses("train", s.train);
                if (s.valid) print_losses("valid", *s.valid);
                std::cout << "arbitrage-free from epoch: "
                          << (s.arbitrage_zero_epoch ? std::to_string(*s.arbitrage_zero_epoch) : "unreached") << '\n';
                return ExitCode::kOk;
            }
            if (*sw) {
                harness::SweepSpec spec;
                harness::ModelSpec base;
                harness::apply_model_keys(sw_flags.merged(sw_config), base);
                spec.config = base.config;
                const auto market = harness::load_market_config(optional_path(sw_market));
                harness::require_admissible(market);
                harness::SweepOptions opts;
                if (subset_opt->count() > 0) opts.subset = split_names(sw_subset);
                opts.jobs = sw_jobs;
                opts.timing = sw_timing;
                opts.progress = &std::cerr;
                if (opts.subset && opts.subset->empty()) {
                    fs::create_directories(sw_out);
                    std::ofstream out(fs::path(sw_out) / "sweep.csv", std::ios::binary | std::ios::trunc);
                    harness::write_sweep_csv(out, {}, sw_timing);
                    std::cout << "models: 0\n";
                    return ExitCode::kOk;
                }
                const auto train_set = io::load_dataset_csv(sw_train);
                std::optional<market::ChainDataset> valid_set;
                if (!sw_valid.empty()) valid_set = io::load_dataset_csv(sw_valid);
                const auto rows =
                    harness::sweep(spec, train_set, valid_set ? &*valid_set : nullptr, market, sw_out, opts);
                std::size_t converged = 0;
                for (const auto& r : rows) converged += (r.status == "ok" && r.summary.converged) ? 1 : 0;
                std::cout << "models: " << rows.size() << ", converged: " << converged << '\n';
                return ExitCode::kOk;
            }
            if (*au) {
                std::unique_ptr<market::PricingModel> model;
                if (flat_opt->count() > 0) {
                    model = std::make_unique<market::FlatBsMarket>(au_flat);
                } else {
                    const auto cfg = harness::load_market_config(optional_path(au_market));
                    harness::require_admissible(cfg);
                    model = std::make_unique<market::LbMarket>(cfg.market);
                }
                const auto r = harness::audit(*model, au_opts, au_tol);
                if (!au_out.empty()) {
                    std::ofstream out(au_out, std::ios::binary | std::ios::trunc);
                    if (!out) throw ParseError("cannot open " + au_out + " for writing");
                    io::write_audit_csv(out, r.report);
                }
                const auto& rep = r.report;
                std::cout << "points: " << rep.points.size() << ", skipped: " << rep.skipped.size() << '\n'
                          << "max relative error: pdf " << rep.max_err_pdf() << ", cdf " << rep.max_err_cdf()
                          << ", calendar " << rep.max_err_calendar() << ", total vega " << rep.max_err_total_vega()
                          << ", pivot " << rep.max_err_pivot() << '\n';
                for (const auto& s : rep.skipped) {
                    std::cout << "skipped tau=" << s.tau << " kappa=" << s.kappa << ": " << s.reason << '\n';
                }
                std::cout << (r.within_tolerance ? "within" : "outside") << " tolerance " << au_tol << '\n';
                return r.within_tolerance ? ExitCode::kOk : ExitCode::kToleranceFailure;
            }
            std::vector<fs::path> runs(rp_runs.begin(), rp_runs.end());
            harness::report(runs, rp_out, {rp_grid == "validation"}, &std::cerr);
            return ExitCode::kOk;
        },
        std::cerr);
}
