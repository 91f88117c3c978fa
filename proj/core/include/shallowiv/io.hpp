#pragma once

// File formats.
//
// Dataset CSV      header `tenor,moneyness,otm_price`, one row per point in
//                  row-major (tenor, then moneyness) order, 17 significant
//                  digits, LF line endings.
// Key-value config one `key = value` per line; `#` starts a comment. Market
//                  keys are sigma0, h0, alpha0, alpha1, beta0, beta1; missing
//                  keys take the reference-market values.
// History CSV      `epoch,loss_total_bps,loss_P_bps,loss_C_bps,loss_V_bps,
//                  loss_B_bps,loss_D_bps,seconds`; loss_D_bps is filled on
//                  snapshot epochs only, seconds only when timing is requested.
// Audit CSV        `tau,kappa,err_pdf,err_cdf,err_calendar,eps_C,eps_V,eps_B`.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>

#include "shallowiv/market.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/training.hpp"

namespace shallowiv::io {

inline constexpr double kBps = 1e4;

/// Shortest-roundtrip-safe rendering with 17 significant digits.
std::string format_double(double value);

void write_dataset_csv(std::ostream& out, const market::ChainDataset& data);
market::ChainDataset read_dataset_csv(std::istream& in);
void save_dataset_csv(const std::filesystem::path& path, const market::ChainDataset& data);
market::ChainDataset load_dataset_csv(const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);
/// Throws ParseError naming the first key not in `allowed`.
void require_known_keys(const KeyValues& kv, const std::set<std::string>& allowed);
double get_double(const KeyValues& kv, const std::string& key, double fallback);

extern const std::set<std::string> kMarketKeys;

market::LbTermStructure term_structure_from(const KeyValues& kv);
void write_term_structure(std::ostream& out, const market::LbTermStructure& ts);

void write_history_csv(std::ostream& out, const training::TrainHistory& history, bool with_seconds);
void write_audit_csv(std::ostream& out, const parity::AuditReport& report);

/// Parse a CSV header + numeric rows into columns by name.
std::map<std::string, std::vector<double>> read_numeric_csv(std::istream& in);

} // namespace shallowiv::io
