#include "shallowiv/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "shallowiv/errors.hpp"

namespace shallowiv::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw ParseError(where + ": not a number: '" + t + "'");
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_dataset_csv(std::ostream& out, const market::ChainDataset& data) {
    out << "tenor,moneyness,otm_price\n";
    for (const auto& q : data.quotes()) {
        out << format_double(q.tau) << ',' << format_double(q.kappa) << ',' << format_double(q.price) << '\n';
    }
}

market::ChainDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset: empty file");
    if (trim(line) != "tenor,moneyness,otm_price") throw ParseError("dataset: unexpected header '" + trim(line) + "'");
    std::vector<market::RelativeQuote> quotes;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        const std::string where = "dataset row " + std::to_string(row);
        if (cells.size() != 3) throw ParseError(where + ": expected 3 columns");
        quotes.push_back({parse_double(cells[0], where), parse_double(cells[1], where), parse_double(cells[2], where)});
        if (!(quotes.back().tau > 0.0) || quotes.back().price < 0.0) {
            throw ParseError(where + ": tenor must be positive and price nonnegative");
        }
    }
    if (quotes.empty()) throw ParseError("dataset: no rows");
    try {
        return market::ChainDataset::from_quotes(std::move(quotes));
    } catch (const ContractViolation& e) {
        throw ParseError(e.what());
    }
}

void save_dataset_csv(const std::filesystem::path& path, const market::ChainDataset& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    write_dataset_csv(out, data);
}

market::ChainDataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return read_dataset_csv(in);
}

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config line " + std::to_string(row) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(row) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_key_values(in);
}

void require_known_keys(const KeyValues& kv, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : kv) {
        if (!allowed.contains(k)) throw ParseError("unknown config key '" + k + "'");
    }
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    return parse_double(it->second, "config key " + key);
}

const std::set<std::string> kMarketKeys = {"sigma0", "h0", "alpha0", "alpha1", "beta0", "beta1"};

market::LbTermStructure term_structure_from(const KeyValues& kv) {
    market::LbTermStructure ts;
    ts.sigma0 = get_double(kv, "sigma0", ts.sigma0);
    ts.h0 = get_double(kv, "h0", ts.h0);
    ts.alpha0 = get_double(kv, "alpha0", ts.alpha0);
    ts.alpha1 = get_double(kv, "alpha1", ts.alpha1);
    ts.beta0 = get_double(kv, "beta0", ts.beta0);
    ts.beta1 = get_double(kv, "beta1", ts.beta1);
    return ts;
}

void write_term_structure(std::ostream& out, const market::LbTermStructure& ts) {
    out << "sigma0 = " << format_double(ts.sigma0) << '\n'
        << "h0 = " << format_double(ts.h0) << '\n'
        << "alpha0 = " << format_double(ts.alpha0) << '\n'
        << "alpha1 = " << format_double(ts.alpha1) << '\n'
        << "beta0 = " << format_double(ts.beta0) << '\n'
        << "beta1 = " << format_double(ts.beta1) << '\n';
}

void write_history_csv(std::ostream& out, const training::TrainHistory& history, bool with_seconds) {
    out << "epoch,loss_total_bps,loss_P_bps,loss_C_bps,loss_V_bps,loss_B_bps,loss_D_bps,seconds\n";
    for (const auto& e : history.epochs) {
        const auto& l = e.losses;
        out << e.epoch << ',' << format_double(kBps * l.total()) << ',' << format_double(kBps * l.price) << ','
            << format_double(kBps * l.calendar) << ',' << format_double(kBps * l.vertical) << ','
            << format_double(kBps * l.butterfly) << ',';
        if (e.density) out << format_double(kBps * *e.density);
        out << ',';
        if (with_seconds) out << format_double(e.seconds);
        out << '\n';
    }
}

void write_audit_csv(std::ostream& out, const parity::AuditReport& report) {
    out << "tau,kappa,err_pdf,err_cdf,err_calendar,eps_C,eps_V,eps_B\n";
    for (const auto& p : report.points) {
        out << format_double(p.tau) << ',' << format_double(p.kappa) << ',' << format_double(p.err_pdf) << ','
            << format_double(p.err_cdf) << ',' << format_double(p.err_calendar) << ','
            << format_double(p.eps_calendar) << ',' << format_double(p.eps_vertical) << ','
            << format_double(p.eps_butterfly) << '\n';
    }
}

std::map<std::string, std::vector<double>> read_numeric_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty file");
    const auto header = split_csv(line);
    std::map<std::string, std::vector<double>> cols;
    for (const auto& h : header) cols[h];
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw ParseError("csv row " + std::to_string(row) + ": column count");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            cols[header[i]].push_back(cells[i].empty() ? std::nan("")
                                                       : parse_double(cells[i], "csv row " + std::to_string(row)));
        }
    }
    return cols;
}

} // namespace shallowiv::io
