#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "shallowiv/checkpoint.hpp"
#include "shallowiv/errors.hpp"
#include "shallowiv/harness.hpp"
#include "shallowiv/io.hpp"

using namespace shallowiv;
using namespace shallowiv::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("shallowiv_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

MarketConfig tiny_market() {
    MarketConfig cfg;
    cfg.train = {{0.5, 1.5, 0.5}, {-0.2, 0.2, 0.05}};
    cfg.valid = {{0.5, 1.5, 0.25}, {-0.2, 0.2, 0.025}};
    return cfg;
}

} // namespace

TEST(MarketConfigTest, DefaultsAndOverrides) {
    const auto d = market_config_from({});
    EXPECT_EQ(d.train.tenors.size() * d.train.moneyness.size(), 4020u);
    const auto c = market_config_from({{"sigma0", "0.2"}, {"train_kappa_step", "0.02"}});
    EXPECT_EQ(c.market.sigma0, 0.2);
    EXPECT_EQ(c.train.moneyness.size(), 101u);
    EXPECT_THROW(market_config_from({{"train_kappa_step", "0"}}), DomainError);
    EXPECT_THROW(market_config_from({{"valid_tau_lo", "-1"}}), DomainError);
    EXPECT_THROW(market_config_from({{"foo", "1"}}), ParseError);
}

TEST(MarketConfigTest, WriteReadRoundTrip) {
    const auto cfg = tiny_market();
    std::stringstream buf;
    write_market_config(buf, cfg);
    const auto back = market_config_from(io::parse_key_values(buf));
    EXPECT_EQ(back.valid.moneyness.step, cfg.valid.moneyness.step);
    EXPECT_EQ(back.market.alpha0, cfg.market.alpha0);
}

TEST(GenerateTest, UnitGridWritesOneRow) {
    MarketConfig cfg;
    cfg.train = {{1.0, 1.0, 0.1}, {0.0, 0.0, 0.01}};
    cfg.valid = cfg.train;
    const auto dir = scratch("unit_grid");
    const auto r = generate(cfg, dir);
    EXPECT_EQ(r.train_rows, 1u);
    const auto d = io::load_dataset_csv(dir / "train.csv");
    EXPECT_EQ(d.size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "market.cfg"));
}

TEST(GenerateTest, InadmissibleNamesCondition) {
    MarketConfig cfg = tiny_market();
    cfg.market.sigma0 = -0.1;
    try {
        generate(cfg, scratch("bad_market"));
        FAIL();
    } catch (const ModelInvalidError& e) {
        EXPECT_NE(std::string(e.what()).find("(iii)"), std::string::npos);
    }
    std::ostringstream err;
    EXPECT_EQ(guarded([&] { return generate(cfg, scratch("bad_market")), 0; }, err), kInvalidConfig);
}

TEST(GuardedTest, ExitCodes) {
    std::ostringstream err;
    EXPECT_EQ(guarded([] { return 0; }, err), kOk);
    EXPECT_EQ(guarded([]() -> int { throw ParseError("x"); }, err), kIoError);
    EXPECT_EQ(guarded([]() -> int { throw NumericError("x"); }, err), kNumericAbort);
    EXPECT_EQ(guarded([]() -> int { throw ModelInvalidError("x"); }, err), kInvalidConfig);
    EXPECT_EQ(guarded([]() -> int { throw fs::filesystem_error("x", std::error_code()); }, err), kIoError);
}

TEST(ModelSpecTest, KeysAndRoundTrip) {
    ModelSpec spec;
    apply_model_keys({{"activation", "tanh"}, {"width", "64"}, {"depth", "2"}, {"seed", "18446744073709551615"},
                      {"vega_weight", "squared"}, {"epochs", "12"}},
                     spec);
    EXPECT_EQ(spec.arch.name(), "tanh-64x2");
    EXPECT_EQ(spec.config.seed, 18446744073709551615ULL);
    std::stringstream buf;
    write_model_spec(buf, spec);
    ModelSpec back;
    apply_model_keys(io::parse_key_values(buf), back);
    EXPECT_EQ(back.arch.name(), "tanh-64x2");
    EXPECT_EQ(back.config.epochs, 12);
    EXPECT_EQ(back.config.vega_weight, training::VegaWeight::Squared);
    EXPECT_THROW(apply_model_keys({{"activation", "sigmoid"}}, back), ModelInvalidError);
    EXPECT_THROW(apply_model_keys({{"seed", "-3"}}, back), ParseError);
    EXPECT_THROW(apply_model_keys({{"width", "0"}}, back), ModelInvalidError);
}

TEST(SweepSpecTest, FortyFiveBijectiveNames) {
    const SweepSpec spec;
    const auto models = spec.models();
    ASSERT_EQ(models.size(), 45u);
    std::set<std::string> names;
    std::set<std::uint64_t> seeds;
    for (const auto& m : models) {
        names.insert(m.name());
        seeds.insert(spec.model_seed(m));
        EXPECT_EQ(neural::NetworkConfig::parse_name(m.name())->widths, m.widths);
    }
    EXPECT_EQ(names.size(), 45u);
    EXPECT_EQ(seeds.size(), 45u);
}

TEST(SweepSpecTest, SubsetSelection) {
    const SweepSpec spec;
    const auto s = spec.select({"tanh-64x2", "relu2-128x1", "relu-64x3"});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].name(), "relu-64x3");
    EXPECT_TRUE(spec.select({}).empty());
    EXPECT_THROW(spec.select({"relu-65x3"}), ModelInvalidError);
}

TEST(SweepSpecTest, SeedsIgnoreOtherModels) {
    SweepSpec a;
    SweepSpec b;
    b.widths = {64};
    const neural::NetworkConfig m{neural::Activation::ELU, {64, 64}};
    EXPECT_EQ(a.model_seed(m), b.model_seed(m));
}

TEST(TrainModelTest, WritesRunDirectoryDeterministically) {
    const auto market = tiny_market();
    const auto train_set = market::generate_dataset(market.train, market.market);
    const auto valid_set = market::generate_dataset(market.valid, market.market);
    ModelSpec spec;
    spec.arch = {neural::Activation::ReLU2, {8}};
    spec.config.epochs = 5;
    spec.config.batch_size = 16;
    spec.config.snapshot_every = 2;
    const auto a = scratch("run_a");
    const auto b = scratch("run_b");
    const auto s = train_model(spec, train_set, &valid_set, market, a, {});
    train_model(spec, train_set, &valid_set, market, b, {});
    for (const char* f : {"model.bin", "history.csv", "summary.csv", "run.cfg", "market.cfg"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_TRUE(fs::exists(a / "train.log"));
    EXPECT_TRUE(s.valid.has_value());
    EXPECT_EQ(s.train_points, 27u);
    EXPECT_EQ(s.valid_points, 5u * 17u);

    const auto out = scratch("report");
    report({a}, out, {});
    EXPECT_TRUE(fs::exists(out / "learning_curve_shallowiv_test_run_a.csv"));
    EXPECT_TRUE(fs::exists(out / "scatter.csv"));
    std::ifstream surface(out / "surface_shallowiv_test_run_a.csv");
    const auto cols = io::read_numeric_csv(surface);
    EXPECT_EQ(cols.at("tau").size(), 5u * 17u);
}

TEST(TrainModelTest, ZeroEpochCheckpointIsInitialization) {
    const auto market = tiny_market();
    const auto train_set = market::generate_dataset(market.train, market.market);
    ModelSpec spec;
    spec.arch = {neural::Activation::Tanh, {4}};
    spec.config.epochs = 0;
    spec.config.seed = 99;
    const auto dir = scratch("zero_epochs");
    train_model(spec, train_set, nullptr, market, dir, {});
    EXPECT_TRUE(neural::load_checkpoint(dir / "model.bin") == neural::he_uniform_init(spec.arch, 99));
}

TEST(SweepTest, SubsetRunWritesRows) {
    const auto market = tiny_market();
    const auto train_set = market::generate_dataset(market.train, market.market);
    SweepSpec spec;
    spec.config.epochs = 2;
    spec.config.batch_size = 16;
    SweepOptions opts;
    opts.subset = std::vector<std::string>{"relu3-32x3", "tanh-32x1"};
    opts.jobs = 2;
    const auto dir = scratch("sweep");
    const auto rows = sweep(spec, train_set, nullptr, market, dir, opts);
    ASSERT_EQ(rows.size(), 2u);
    std::ifstream csv(dir / "sweep.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[1].substr(0, 11), "relu3-32x3,");
    EXPECT_EQ(lines[2].substr(0, 10), "tanh-32x1,");
    EXPECT_TRUE(fs::exists(dir / "tanh-32x1" / "model.bin"));
    EXPECT_EQ(rows[1].summary.seed, spec.model_seed(rows[1].model));
}

TEST(AuditTest, ToleranceDecidesOutcome) {
    parity::AuditOptions o;
    const market::LbMarket lb{market::LbTermStructure{}};
    EXPECT_TRUE(audit(lb, o, 1e-3).within_tolerance);
    o.fd_step = 1e-1;
    EXPECT_FALSE(audit(lb, o, 1e-3).within_tolerance);
}

TEST(ReportTest, MissingRunIsIoError) {
    const auto empty = scratch("empty_run");
    EXPECT_THROW(report({empty}, scratch("report_out"), {}), ParseError);
}
