#include "shallowiv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "shallowiv/checkpoint.hpp"
#include "shallowiv/errors.hpp"
#include "shallowiv/random.hpp"

namespace shallowiv::harness {

namespace fs = std::filesystem;
using io::format_double;
using io::kBps;

int guarded(const std::function<int()>& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const NumericError& e) {
        err << "numeric abort: " << e.what() << '\n';
        return kNumericAbort;
    } catch (const ModelInvalidError& e) {
        err << "invalid model: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const DomainError& e) {
        err << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const ContractViolation& e) {
        err << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const UnattainablePriceError& e) {
        err << "numeric abort: " << e.what() << '\n';
        return kNumericAbort;
    }
}

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    return out;
}

void check_grid(const market::UniformGrid& g, const std::string& name, bool positive) {
    if (!(g.step > 0.0) || !(g.hi >= g.lo) || !std::isfinite(g.lo) || !std::isfinite(g.hi)) {
        throw DomainError(name + ": need lo <= hi and step > 0");
    }
    if (positive && !(g.lo > 0.0)) throw DomainError(name + ": tenors must be positive");
}

market::UniformGrid grid_from(const io::KeyValues& kv, const std::string& prefix, market::UniformGrid g) {
    g.lo = io::get_double(kv, prefix + "_lo", g.lo);
    g.hi = io::get_double(kv, prefix + "_hi", g.hi);
    g.step = io::get_double(kv, prefix + "_step", g.step);
    return g;
}

void write_grid(std::ostream& out, const std::string& prefix, const market::UniformGrid& g) {
    out << prefix << "_lo = " << format_double(g.lo) << '\n'
        << prefix << "_hi = " << format_double(g.hi) << '\n'
        << prefix << "_step = " << format_double(g.step) << '\n';
}

std::set<std::string> market_config_keys() {
    std::set<std::string> keys = io::kMarketKeys;
    for (const char* set : {"train", "valid"}) {
        for (const char* axis : {"tau", "kappa"}) {
            for (const char* part : {"lo", "hi", "step"}) {
                keys.insert(std::string(set) + "_" + axis + "_" + part);
            }
        }
    }
    return keys;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ParseError("config key " + key + ": not an unsigned integer: '" + text + "'");
    }
    return v;
}

int parse_int(const io::KeyValues& kv, const std::string& key, int fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const std::uint64_t v = parse_u64(it->second, key);
    if (v > 1'000'000'000ULL) throw ParseError("config key " + key + ": out of range");
    return static_cast<int>(v);
}

std::string csv_bps(double loss) { return format_double(kBps * loss); }

std::string csv_optional_bps(const std::optional<double>& loss) { return loss ? csv_bps(*loss) : std::string(); }

} // namespace

// ---------------------------------------------------------------------------

MarketConfig market_config_from(const io::KeyValues& kv) {
    io::require_known_keys(kv, market_config_keys());
    MarketConfig cfg;
    cfg.market = io::term_structure_from(kv);
    cfg.train.tenors = grid_from(kv, "train_tau", cfg.train.tenors);
    cfg.train.moneyness = grid_from(kv, "train_kappa", cfg.train.moneyness);
    cfg.valid.tenors = grid_from(kv, "valid_tau", cfg.valid.tenors);
    cfg.valid.moneyness = grid_from(kv, "valid_kappa", cfg.valid.moneyness);
    check_grid(cfg.train.tenors, "train_tau", true);
    check_grid(cfg.train.moneyness, "train_kappa", false);
    check_grid(cfg.valid.tenors, "valid_tau", true);
    check_grid(cfg.valid.moneyness, "valid_kappa", false);
    return cfg;
}

MarketConfig load_market_config(const std::optional<fs::path>& path) {
    if (!path) return MarketConfig{};
    return market_config_from(io::load_key_values(*path));
}

void write_market_config(std::ostream& out, const MarketConfig& cfg) {
    io::write_term_structure(out, cfg.market);
    write_grid(out, "train_tau", cfg.train.tenors);
    write_grid(out, "train_kappa", cfg.train.moneyness);
    write_grid(out, "valid_tau", cfg.valid.tenors);
    write_grid(out, "valid_kappa", cfg.valid.moneyness);
}

void require_admissible(const MarketConfig& cfg) {
    const double lo = std::min(cfg.train.tenors.lo, cfg.valid.tenors.lo);
    const double hi = std::max(cfg.train.tenors.hi, cfg.valid.tenors.hi);
    const double step = std::min(cfg.train.tenors.step, cfg.valid.tenors.step);
    const auto violations = market::check_term_structure(cfg.market, lo, hi, step);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "term structure inadmissible:";
    for (const auto& v : violations) msg << " condition " << v.detail << " (tau=" << v.tau << ");";
    throw ModelInvalidError(msg.str());
}

GenerateResult generate(const MarketConfig& cfg, const fs::path& out_dir) {
    require_admissible(cfg);
    const auto train = market::generate_dataset(cfg.train, cfg.market);
    const auto valid = market::generate_dataset(cfg.valid, cfg.market);
    fs::create_directories(out_dir);
    io::save_dataset_csv(out_dir / "train.csv", train);
    io::save_dataset_csv(out_dir / "valid.csv", valid);
    auto out = open_out(out_dir / "market.cfg");
    write_market_config(out, cfg);
    return {train.size(), valid.size()};
}

// ---------------------------------------------------------------------------

void apply_model_keys(const io::KeyValues& kv, ModelSpec& spec) {
    static const std::set<std::string> keys = {"model",      "activation", "width",         "depth",
                                               "seed",       "epochs",     "batch_size",    "learning_rate",
                                               "beta1",      "beta2",      "epsilon",       "vega_weight",
                                               "vega_floor", "snapshot_every"};
    io::require_known_keys(kv, keys);
    if (const auto it = kv.find("model"); it != kv.end()) {
        const auto parsed = neural::NetworkConfig::parse_name(it->second);
        if (!parsed) throw ModelInvalidError("unknown model name '" + it->second + "'");
        spec.arch = *parsed;
    }
    if (const auto it = kv.find("activation"); it != kv.end()) {
        const auto a = neural::parse_activation(it->second);
        if (!a) throw ModelInvalidError("unknown activation '" + it->second + "'");
        spec.arch.hidden = *a;
    }
    const int width = parse_int(kv, "width", spec.arch.widths.empty() ? 0 : spec.arch.widths.front());
    const int depth = parse_int(kv, "depth", spec.arch.depth());
    if (width < 1 || depth < 1) throw ModelInvalidError("width and depth must be at least 1");
    spec.arch.widths.assign(static_cast<std::size_t>(depth), width);

    auto& c = spec.config;
    if (const auto it = kv.find("seed"); it != kv.end()) c.seed = parse_u64(it->second, "seed");
    c.epochs = parse_int(kv, "epochs", c.epochs);
    c.batch_size = parse_int(kv, "batch_size", c.batch_size);
    c.snapshot_every = parse_int(kv, "snapshot_every", c.snapshot_every);
    c.learning_rate = io::get_double(kv, "learning_rate", c.learning_rate);
    c.beta1 = io::get_double(kv, "beta1", c.beta1);
    c.beta2 = io::get_double(kv, "beta2", c.beta2);
    c.epsilon = io::get_double(kv, "epsilon", c.epsilon);
    c.vega_floor = io::get_double(kv, "vega_floor", c.vega_floor);
    if (const auto it = kv.find("vega_weight"); it != kv.end()) {
        const auto w = training::parse_vega_weight(it->second);
        if (!w) throw ModelInvalidError("unknown vega_weight '" + it->second + "'");
        c.vega_weight = *w;
    }
    if (c.batch_size < 1) throw ModelInvalidError("batch_size must be at least 1");
    if (!(c.learning_rate > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) ||
        !(c.epsilon >= 0.0) || !(c.vega_floor > 0.0)) {
        throw ModelInvalidError("optimizer settings out of range");
    }
}

void write_model_spec(std::ostream& out, const ModelSpec& spec) {
    const auto& c = spec.config;
    out << "model = " << spec.arch.name() << '\n'
        << "seed = " << c.seed << '\n'
        << "epochs = " << c.epochs << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "learning_rate = " << format_double(c.learning_rate) << '\n'
        << "beta1 = " << format_double(c.beta1) << '\n'
        << "beta2 = " << format_double(c.beta2) << '\n'
        << "epsilon = " << format_double(c.epsilon) << '\n'
        << "vega_weight = " << training::to_string(c.vega_weight) << '\n'
        << "vega_floor = " << format_double(c.vega_floor) << '\n'
        << "snapshot_every = " << c.snapshot_every << '\n';
}

namespace {

training::LossBreakdown final_losses(const neural::VolNetwork& net, const market::ChainDataset& data,
                                     const training::TrainConfig& config, const market::LbTermStructure& ts) {
    const bool density = data.moneyness().size() >= 2;
    return training::evaluate(net, data, config, density ? &ts : nullptr);
}

void write_loss_row(std::ostream& out, const std::string& name, std::size_t points,
                    const training::LossBreakdown& l) {
    out << name << ',' << points << ',' << csv_bps(l.total()) << ',' << csv_bps(l.price) << ','
        << csv_bps(l.calendar) << ',' << csv_bps(l.vertical) << ',' << csv_bps(l.butterfly) << ','
        << csv_optional_bps(l.density) << '\n';
}

} // namespace

void write_summary_csv(std::ostream& out, const RunSummary& s) {
    out << "dataset,points,loss_total_bps,loss_P_bps,loss_C_bps,loss_V_bps,loss_B_bps,loss_D_bps\n";
    write_loss_row(out, "train", s.train_points, s.train);
    if (s.valid) write_loss_row(out, "valid", s.valid_points, *s.valid);
}

RunSummary train_model(const ModelSpec& spec, const market::ChainDataset& train_set,
                       const market::ChainDataset* valid_set, const MarketConfig& market, const fs::path& out_dir,
                       const TrainOptions& options) {
    fs::create_directories(out_dir);
    std::ofstream log(out_dir / "train.log", std::ios::trunc);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    {
        auto cfg = open_out(out_dir / "run.cfg");
        write_model_spec(cfg, spec);
        auto mk = open_out(out_dir / "market.cfg");
        write_market_config(mk, market);
    }

    const bool density = train_set.moneyness().size() >= 2;
    const auto on_epoch = [&](const training::EpochRecord& e, const neural::VolNetwork&) {
        if (e.density || e.epoch == spec.config.epochs) {
            std::ostringstream line;
            line << spec.arch.name() << " epoch " << e.epoch << " total " << kBps * e.losses.total()
                 << " bps, price " << kBps * e.losses.price << " bps";
            if (e.density) line << ", density " << kBps * *e.density << " bps";
            log << line.str() << ", " << elapsed() << " s\n";
            if (options.progress) *options.progress << line.str() << '\n';
        }
    };

    auto result = training::train(spec.arch, spec.config, train_set, density ? &market.market : nullptr, on_epoch);
    if (!options.timing) {
        for (auto& e : result.history.epochs) e.seconds = 0.0;
    }

    RunSummary s;
    s.model = spec.arch.name();
    s.seed = spec.config.seed;
    s.arbitrage_zero_epoch = result.history.arbitrage_zero_epoch();
    s.train = final_losses(result.net, train_set, spec.config, market.market);
    s.train_points = train_set.size();
    if (valid_set) s.valid_points = valid_set->size();
    if (valid_set) s.valid = final_losses(result.net, *valid_set, spec.config, market.market);
    s.final_epoch_loss = result.history.epochs.empty() ? s.train.total() : result.history.epochs.back().losses.total();
    s.converged = std::isfinite(s.final_epoch_loss) && s.final_epoch_loss <= kConvergenceThreshold;

    neural::save_checkpoint(out_dir / "model.bin", result.net);
    {
        auto out = open_out(out_dir / "history.csv");
        io::write_history_csv(out, result.history, options.timing);
    }
    {
        auto out = open_out(out_dir / "summary.csv");
        write_summary_csv(out, s);
    }
    s.seconds = elapsed();
    log << "finished in " << s.seconds << " s\n";
    return s;
}

// ---------------------------------------------------------------------------

std::vector<neural::NetworkConfig> SweepSpec::models() const {
    std::vector<neural::NetworkConfig> out;
    for (auto a : activations) {
        for (int w : widths) {
            for (int d : depths) out.push_back({a, std::vector<int>(static_cast<std::size_t>(d), w)});
        }
    }
    return out;
}

std::vector<neural::NetworkConfig> SweepSpec::select(const std::vector<std::string>& subset) const {
    const auto all = models();
    for (const auto& name : subset) {
        const bool known = std::any_of(all.begin(), all.end(), [&](const auto& m) { return m.name() == name; });
        if (!known) throw ModelInvalidError("model '" + name + "' is not in the sweep");
    }
    std::vector<neural::NetworkConfig> out;
    for (const auto& m : all) {
        if (std::find(subset.begin(), subset.end(), m.name()) != subset.end()) out.push_back(m);
    }
    return out;
}

std::uint64_t SweepSpec::model_seed(const neural::NetworkConfig& model) const {
    return derive_seed(config.seed, model.name());
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const market::ChainDataset& train_set,
                            const market::ChainDataset* valid_set, const MarketConfig& market, const fs::path& out_dir,
                            const SweepOptions& options) {
    const auto models = options.subset ? spec.select(*options.subset) : spec.models();
    fs::create_directories(out_dir);
    std::vector<SweepRow> rows(models.size());
    std::mutex io_mutex;
    std::ofstream log(out_dir / "sweep.log", std::ios::trunc);

    auto run_one = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.model = models[i];
        row.summary.model = models[i].name();
        ModelSpec ms{models[i], spec.config};
        ms.config.seed = spec.model_seed(models[i]);
        row.summary.seed = ms.config.seed;
        try {
            row.summary = train_model(ms, train_set, valid_set, market, out_dir / row.summary.model,
                                      {options.timing, nullptr});
            row.status = "ok";
        } catch (const NumericError& e) {
            row.status = "numeric_abort";
            row.message = e.what();
        } catch (const std::exception& e) {
            row.status = "error";
            row.message = e.what();
        }
        std::lock_guard lock(io_mutex);
        log << row.summary.model << ' ' << row.status << ' ' << row.summary.seconds << " s";
        if (!row.message.empty()) log << ": " << row.message;
        log << '\n';
        log.flush();
        if (options.progress) {
            *options.progress << row.summary.model << ": " << row.status;
            if (row.status == "ok") {
                *options.progress << ", train price " << kBps * row.summary.train.price << " bps"
                                  << (row.summary.converged ? "" : ", not converged");
            }
            *options.progress << '\n';
        }
    };

    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(models.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < models.size(); i = next++) run_one(i);
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    auto out = open_out(out_dir / "sweep.csv");
    write_sweep_csv(out, rows, options.timing);
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_seconds) {
    out << "model,activation,width,depth,seed,status,converged,arbitrage_zero_epoch,final_epoch_loss_bps,"
           "loss_P_train_bps,loss_P_valid_bps,loss_D_train_bps,loss_D_valid_bps,arbitrage_train_bps,"
           "arbitrage_valid_bps,seconds\n";
    for (const auto& r : rows) {
        const auto& s = r.summary;
        const bool ok = r.status == "ok";
        out << r.model.name() << ',' << neural::to_string(r.model.hidden) << ',' << r.model.widths.front() << ','
            << r.model.depth() << ',' << s.seed << ',' << r.status << ',' << (ok && s.converged ? 1 : 0) << ',';
        if (ok && s.arbitrage_zero_epoch) out << *s.arbitrage_zero_epoch;
        else out << "unreached";
        out << ',';
        if (ok) {
            const auto arb = [](const training::LossBreakdown& l) { return l.calendar + l.vertical + l.butterfly; };
            out << csv_bps(s.final_epoch_loss) << ',' << csv_bps(s.train.price) << ','
                << (s.valid ? csv_bps(s.valid->price) : "") << ',' << csv_optional_bps(s.train.density) << ','
                << (s.valid ? csv_optional_bps(s.valid->density) : "") << ',' << csv_bps(arb(s.train)) << ','
                << (s.valid ? csv_bps(arb(*s.valid)) : "") << ',';
        } else {
            out << ",,,,,,,";
        }
        if (with_seconds) out << format_double(s.seconds);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

AuditResult audit(const market::PricingModel& model, const parity::AuditOptions& options, double tolerance) {
    AuditResult out{parity::parity_audit(model, options), false};
    out.within_tolerance = out.report.skipped.empty() && !out.report.points.empty() &&
                           out.report.max_identity_error() <= tolerance;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct RunArtifacts {
    std::string name;
    ModelSpec spec;
    MarketConfig market;
    neural::VolNetwork net;
    std::map<std::string, std::vector<double>> history;
    std::map<std::string, std::vector<std::string>> summary;  // dataset -> cells
};

RunArtifacts load_run(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ParseError("run directory " + dir.string() + " does not exist");
    for (const char* f : {"model.bin", "history.csv", "summary.csv", "run.cfg", "market.cfg"}) {
        if (!fs::exists(dir / f)) throw ParseError("run directory " + dir.string() + " has no " + f);
    }
    RunArtifacts run;
    run.name = fs::absolute(dir).lexically_normal().filename().string();
    if (run.name.empty()) run.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    apply_model_keys(io::load_key_values(dir / "run.cfg"), run.spec);
    run.market = load_market_config(dir / "market.cfg");
    run.net = neural::load_checkpoint(dir / "model.bin");
    {
        std::ifstream in(dir / "history.csv");
        run.history = io::read_numeric_csv(in);
    }
    std::ifstream in(dir / "summary.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 8) throw ParseError("summary.csv in " + dir.string() + ": column count");
        run.summary[cells[0]] = cells;
    }
    if (!run.summary.contains("train")) throw ParseError("summary.csv in " + dir.string() + ": no train row");
    return run;
}

void write_surface(std::ostream& out, const RunArtifacts& run, const market::GridSpec& grid) {
    out << "tau,kappa,omega_hat,omega,psi_hat,psi_lb\n";
    const market::LbMarket truth(run.market.market);
    const auto kappas = grid.moneyness.points();
    std::vector<double> tau(kappas.size());
    for (double t : grid.tenors.points()) {
        std::fill(tau.begin(), tau.end(), t);
        const auto m = market::term_structure_eval(t, run.market.market);
        const auto jet = neural::forward_jet(run.net, tau, kappas, false);
        for (std::size_t j = 0; j < kappas.size(); ++j) {
            const auto k = static_cast<Eigen::Index>(j);
            const parity::SurfaceJet sj{t, kappas[j], jet.omega(k), jet.d_tau(k), jet.d_kappa(k), jet.d_kappa_kappa(k)};
            double omega = std::nan("");
            try {
                omega = truth.total_vol(t, kappas[j]);
            } catch (const UnattainablePriceError&) {
                // price underflows deep in the wings
            }
            out << format_double(t) << ',' << format_double(kappas[j]) << ',' << format_double(jet.omega(k)) << ','
                << format_double(omega) << ',' << format_double(parity::implied_pdf(sj)) << ','
                << format_double(market::lb_pdf(kappas[j], m)) << '\n';
        }
    }
}

} // namespace

void report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir, const ReportOptions& options,
            std::ostream* progress) {
    if (run_dirs.empty()) throw ParseError("report: no run directories given");
    std::vector<RunArtifacts> runs;
    for (const auto& dir : run_dirs) runs.push_back(load_run(dir));
    fs::create_directories(out_dir);

    static const char* kHistoryColumns[] = {"epoch",      "loss_total_bps", "loss_P_bps", "loss_C_bps",
                                            "loss_V_bps", "loss_B_bps",     "loss_D_bps"};
    for (const auto& run : runs) {
        auto out = open_out(out_dir / ("learning_curve_" + run.name + ".csv"));
        for (std::size_t c = 0; c < std::size(kHistoryColumns); ++c) out << (c ? "," : "") << kHistoryColumns[c];
        out << '\n';
        const auto& epochs = run.history.at("epoch");
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            for (std::size_t c = 0; c < std::size(kHistoryColumns); ++c) {
                const double v = run.history.at(kHistoryColumns[c])[i];
                out << (c ? "," : "");
                if (c == 0) out << static_cast<long>(v);
                else if (!std::isnan(v)) out << format_double(v);
            }
            out << '\n';
        }
    }

    {
        auto out = open_out(out_dir / "scatter.csv");
        out << "run,model,activation,width,depth,loss_P_train_bps,loss_P_valid_bps,loss_D_train_bps,"
               "loss_D_valid_bps\n";
        for (const auto& run : runs) {
            const auto& a = run.spec.arch;
            const auto& tr = run.summary.at("train");
            const auto va = run.summary.find("valid");
            out << run.name << ',' << a.name() << ',' << neural::to_string(a.hidden) << ',' << a.widths.front() << ','
                << a.depth() << ',' << tr[3] << ',' << (va != run.summary.end() ? va->second[3] : "") << ',' << tr[7]
                << ',' << (va != run.summary.end() ? va->second[7] : "") << '\n';
        }
    }

    for (const auto& run : runs) {
        if (progress) *progress << "surface " << run.name << '\n';
        auto out = open_out(out_dir / ("surface_" + run.name + ".csv"));
        write_surface(out, run, options.validation_grid ? run.market.valid : run.market.train);
    }
}

} // namespace shallowiv::harness
