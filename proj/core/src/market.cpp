#include "shallowiv/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "shallowiv/errors.hpp"
#include "special_detail.hpp"

namespace shallowiv::market {

using special::log_beta;
using special::normal_cdf;
using special::normal_pdf;
using special::polygamma;

double to_moneyness(double strike, double forward) {
    if (!(strike > 0.0) || !(forward > 0.0)) throw DomainError("to_moneyness: strike and forward must be positive");
    return std::log(strike / forward);
}

double to_relative_price(double dollar_price, double spot, double dividend_discount) {
    if (!(spot > 0.0) || !(dividend_discount > 0.0)) {
        throw DomainError("to_relative_price: spot and dividend discount must be positive");
    }
    if (dollar_price < 0.0) throw DomainError("to_relative_price: negative price");
    return dollar_price / (spot * dividend_discount);
}

// ---------------------------------------------------------------------------

Pivots pivots(double kappa, double omega) {
    const double half = 0.5 * omega;
    const double ratio = kappa / omega;
    return {ratio + half, ratio - half};
}

namespace {

void check_bs_args(double tau, double omega, const char* fn) {
    if (!(tau > 0.0)) throw DomainError(std::string(fn) + ": tenor must be positive");
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw DomainError(std::string(fn) + ": omega must be >= 0");
}

} // namespace

double bs_put(double tau, double kappa, double omega) {
    check_bs_args(tau, omega, "bs_put");
    const double ek = std::exp(kappa);
    if (omega == 0.0) return std::max(ek - 1.0, 0.0);
    const auto [zp, zm] = pivots(kappa, omega);
    return ek * normal_cdf(zp) - normal_cdf(zm);
}

double bs_call(double tau, double kappa, double omega) {
    check_bs_args(tau, omega, "bs_call");
    const double ek = std::exp(kappa);
    if (omega == 0.0) return std::max(1.0 - ek, 0.0);
    const auto [zp, zm] = pivots(kappa, omega);
    return normal_cdf(-zm) - ek * normal_cdf(-zp);
}

double bs_otm(double tau, double kappa, double omega) {
    return kappa <= 0.0 ? bs_put(tau, kappa, omega) : bs_call(tau, kappa, omega);
}

double bs_vega(double tau, double kappa, double omega) {
    if (!(tau > 0.0)) throw DomainError("bs_vega: tenor must be positive");
    if (!(omega > 0.0)) throw DomainError("bs_vega: omega must be positive");
    return normal_pdf(pivots(kappa, omega).minus) * std::sqrt(tau);
}

double implied_total_vol(double tau, double kappa, double otm_price) {
    constexpr double kLo = 1e-8;
    constexpr double kHi = 10.0;
    if (!(tau > 0.0)) throw DomainError("implied_total_vol: tenor must be positive");
    const double upper = kappa <= 0.0 ? std::exp(kappa) : 1.0;
    if (!(otm_price > 0.0) || !(otm_price < upper)) {
        std::ostringstream msg;
        msg << "implied_total_vol: price " << otm_price << " outside (0, " << upper << ") at kappa=" << kappa;
        throw UnattainablePriceError(msg.str());
    }
    auto residual = [&](double w) { return bs_otm(tau, kappa, w) - otm_price; };

    double lo = kLo;
    double hi = kHi;
    if (residual(hi) < 0.0) throw UnattainablePriceError("implied_total_vol: price needs omega > 10");
    if (residual(lo) > 0.0) throw UnattainablePriceError("implied_total_vol: price needs omega < 1e-8");

    // Rough start: the ATM linearisation or the inflection point sqrt(2|kappa|).
    double w = std::max(std::sqrt(2.0 * std::abs(kappa)), otm_price * std::sqrt(2.0 * std::numbers::pi));
    w = std::clamp(w, lo, hi);

    for (int iter = 0; iter < 300; ++iter) {
        const double f = residual(w);
        if (f == 0.0) return w;
        if (f > 0.0) hi = w; else lo = w;
        const double slope = normal_pdf(pivots(kappa, w).minus);  // dPrice/domega
        double next = w - f / slope;
        if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - w) <= 2.0 * std::numeric_limits<double>::epsilon() * w || hi - lo <= 1e-300) {
            w = next;
            break;
        }
        w = next;
    }
    if (std::abs(residual(w)) > 1e-12) {
        throw UnattainablePriceError("implied_total_vol: inversion did not reach 1e-12 in price");
    }
    return w;
}

// ---------------------------------------------------------------------------

double lb_location(double dispersion, double alpha, double beta) {
    if (!(dispersion >= 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
        throw DomainError("lb_location: need dispersion >= 0 and positive shapes");
    }
    if (!(dispersion < beta)) throw DomainError("lb_location: dispersion must be below beta");
    if (dispersion == 0.0) return 0.0;
    return log_beta(alpha, beta) - log_beta(alpha + dispersion, beta - dispersion);
}

LbMarginal LbMarginal::risk_neutral(double dispersion, double alpha, double beta) {
    if (!(dispersion > 0.0)) throw DomainError("LbMarginal: dispersion must be positive");
    return {lb_location(dispersion, alpha, beta), dispersion, alpha, beta};
}

namespace {

double standard_lb_pdf(double z, double a, double b) {
    using special::log_logistic_cdf;
    return std::exp(a * log_logistic_cdf(z) + b * log_logistic_cdf(-z) - log_beta(a, b));
}

} // namespace

double lb_pdf(double x, const LbMarginal& m) {
    const double z = (x - m.mu) / m.dispersion;
    return standard_lb_pdf(z, m.alpha, m.beta) / m.dispersion;
}

Probability lb_cdf(double x, const LbMarginal& m) {
    const double z = (x - m.mu) / m.dispersion;
    return {special::detail::reg_inc_beta_logistic(z, m.alpha, m.beta)};
}

double lb_tilted_pdf(double x, const LbMarginal& m) {
    const double z = (x - m.mu) / m.dispersion;
    return standard_lb_pdf(z, m.alpha + m.dispersion, m.beta - m.dispersion) / m.dispersion;
}

Probability lb_tilted_cdf(double x, const LbMarginal& m) {
    const double z = (x - m.mu) / m.dispersion;
    return {special::detail::reg_inc_beta_logistic(z, m.alpha + m.dispersion, m.beta - m.dispersion)};
}

LbMoments lb_moments(const LbMarginal& m) {
    // Cumulants of ln(G_alpha / G_beta) are polygamma(n-1, alpha) +- polygamma(n-1, beta).
    const double k2 = polygamma(1, m.alpha) + polygamma(1, m.beta);
    LbMoments out{};
    out.mean = m.dispersion * (polygamma(0, m.alpha) - polygamma(0, m.beta)) + m.mu;
    out.variance = m.dispersion * m.dispersion * k2;
    out.skewness = (polygamma(2, m.alpha) - polygamma(2, m.beta)) / std::pow(k2, 1.5);
    out.excess_kurtosis = (polygamma(3, m.alpha) + polygamma(3, m.beta)) / (k2 * k2);
    return out;
}

double lb_dispersion_for_variance(double variance, double alpha, double beta) {
    if (!(variance > 0.0)) throw DomainError("lb_dispersion_for_variance: variance must be positive");
    return std::sqrt(variance / (polygamma(1, alpha) + polygamma(1, beta)));
}

OptionPrices lb_price(double kappa, const LbMarginal& m) {
    using special::detail::reg_inc_beta_logistic;
    const double z = (kappa - m.mu) / m.dispersion;
    const double s = m.dispersion;
    const double ek = std::exp(kappa);
    const double put = ek * reg_inc_beta_logistic(z, m.alpha, m.beta) -
                       reg_inc_beta_logistic(z, m.alpha + s, m.beta - s);
    const double call = reg_inc_beta_logistic(-z, m.beta - s, m.alpha + s) -
                        ek * reg_inc_beta_logistic(-z, m.beta, m.alpha);
    OptionPrices out{std::max(put, 0.0), std::max(call, 0.0), 0.0};
    out.otm = kappa <= 0.0 ? out.put : out.call;
    return out;
}

// ---------------------------------------------------------------------------

double LbTermStructure::dispersion(double tau) const { return sigma0 * std::pow(tau, h0); }

LbMarginal LbTermStructure::raw(double tau) const {
    const double s = dispersion(tau);
    LbMarginal m;
    m.dispersion = s;
    m.alpha = alpha1 + (alpha0 - alpha1) / (1.0 + s);
    m.beta = beta1 + (beta0 - beta1) / (1.0 + s) + s;
    return m;
}

std::string condition_label(int condition) {
    static const char* labels[] = {"(i)", "(ii)", "(iii)", "(iv)"};
    if (condition < 1 || condition > 4) return "(?)";
    return labels[condition - 1];
}

LbMarginal term_structure_eval(double tau, const LbTermStructure& ts) {
    if (!(tau > 0.0)) throw DomainError("term_structure_eval: tenor must be positive");
    LbMarginal m = ts.raw(tau);
    std::ostringstream msg;
    msg << "term structure invalid at tau=" << tau << ": ";
    if (!std::isfinite(m.dispersion) || !(m.dispersion > 0.0)) {
        msg << "condition (iii) dispersion must be positive, got " << m.dispersion;
        throw ModelInvalidError(msg.str());
    }
    if (!(m.alpha > 0.0) || !(m.beta > 0.0)) {
        msg << "condition (ii) alpha, beta > 0, got alpha=" << m.alpha << " beta=" << m.beta;
        throw ModelInvalidError(msg.str());
    }
    if (!(m.dispersion < m.beta)) {
        msg << "condition (i) dispersion < beta, got " << m.dispersion << " >= " << m.beta;
        throw ModelInvalidError(msg.str());
    }
    m.mu = lb_location(m.dispersion, m.alpha, m.beta);
    return m;
}

OptionPrices lb_price(double tau, double kappa, const LbTermStructure& ts) {
    return lb_price(kappa, term_structure_eval(tau, ts));
}

std::vector<TermStructureViolation> check_term_structure(const LbTermStructure& ts, double tau_lo,
                                                         double tau_hi, double step) {
    if (!(tau_lo > 0.0) || !(tau_hi >= tau_lo) || !(step > 0.0)) {
        throw DomainError("check_term_structure: need 0 < tau_lo <= tau_hi and step > 0");
    }
    std::vector<TermStructureViolation> out;
    auto flag = [&](int cond, double tau, const std::string& what) {
        // one entry per condition is enough to diagnose a config
        for (const auto& v : out) {
            if (v.condition == cond) return;
        }
        out.push_back({cond, tau, condition_label(cond) + " " + what});
    };

    const double s0 = ts.dispersion(0.0);
    if (!(ts.h0 > 0.0) || s0 != 0.0) flag(3, 0.0, "dispersion(0) must be 0");

    const auto n = static_cast<std::size_t>(std::floor((tau_hi - tau_lo) / step + 1e-9)) + 1;
    constexpr double kSlack = 1e-12;
    LbMarginal prev{};
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = tau_lo + static_cast<double>(i) * step;
        const LbMarginal m = ts.raw(tau);
        if (!(m.dispersion < m.beta)) flag(1, tau, "dispersion < beta violated");
        if (!(m.alpha > 0.0) || !(m.beta > 0.0)) flag(2, tau, "alpha > 0 and beta > 0 violated");
        if (!(m.dispersion > 0.0)) flag(3, tau, "dispersion must be positive for tau > 0");
        if (i > 0) {
            if (m.dispersion < prev.dispersion - kSlack * std::abs(prev.dispersion)) {
                flag(3, tau, "dispersion must be nondecreasing");
            }
            if (m.dispersion > 0.0 && prev.dispersion > 0.0) {
                const double ra = m.alpha / m.dispersion;
                const double rb = m.beta / m.dispersion;
                const double pa = prev.alpha / prev.dispersion;
                const double pb = prev.beta / prev.dispersion;
                if (ra > pa + kSlack * std::abs(pa) || rb > pb + kSlack * std::abs(pb)) {
                    flag(4, tau, "alpha/dispersion and beta/dispersion must be nonincreasing");
                }
            }
        }
        prev = m;
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.condition < b.condition; });
    return out;
}

// ---------------------------------------------------------------------------

double PricingModel::total_vol(double tau, double kappa) const {
    return implied_total_vol(tau, kappa, price(tau, kappa).otm);
}

OptionPrices LbMarket::price(double tau, double kappa) const { return lb_price(tau, kappa, ts_); }

double LbMarket::pdf(double tau, double x) const { return lb_pdf(x, term_structure_eval(tau, ts_)); }

double LbMarket::cdf(double tau, double x) const { return lb_cdf(x, term_structure_eval(tau, ts_)); }

FlatBsMarket::FlatBsMarket(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0)) throw DomainError("FlatBsMarket: sigma must be positive");
}

OptionPrices FlatBsMarket::price(double tau, double kappa) const {
    const double w = total_vol(tau, kappa);
    OptionPrices out{bs_put(tau, kappa, w), bs_call(tau, kappa, w), 0.0};
    out.otm = kappa <= 0.0 ? out.put : out.call;
    return out;
}

double FlatBsMarket::pdf(double tau, double x) const {
    const double w = total_vol(tau, x);
    return normal_pdf(pivots(x, w).plus) / w;
}

double FlatBsMarket::cdf(double tau, double x) const { return normal_cdf(pivots(x, total_vol(tau, x)).plus); }

double FlatBsMarket::total_vol(double tau, double /*kappa*/) const { return sigma_ * std::sqrt(tau); }

// ---------------------------------------------------------------------------

std::size_t UniformGrid::size() const {
    if (!(hi >= lo)) throw ContractViolation("UniformGrid: hi < lo");
    if (hi == lo) return 1;
    if (!(step > 0.0)) throw ContractViolation("UniformGrid: step must be positive");
    return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
}

double UniformGrid::at(std::size_t i) const {
    // Grids anchored on a multiple of the step are generated as integer
    // multiples so that e.g. 0.1 * 20 lands exactly on 2.
    const double k0 = lo / step;
    const double k0r = std::round(k0);
    if (std::abs(k0 - k0r) < 1e-9) return (k0r + static_cast<double>(i)) * step;
    return lo + static_cast<double>(i) * step;
}

std::vector<double> UniformGrid::points() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
    return out;
}

GridSpec GridSpec::training() { return {{0.1, 2.0, 0.1}, {-1.0, 1.0, 0.01}}; }

GridSpec GridSpec::validation() { return {{0.1, 2.0, 0.01}, {-1.0, 1.0, 0.001}}; }

ChainDataset::ChainDataset(std::vector<double> tenors, std::vector<double> moneyness,
                           std::vector<RelativeQuote> quotes)
    : tenors_(std::move(tenors)), moneyness_(std::move(moneyness)), quotes_(std::move(quotes)) {
    if (quotes_.size() != tenors_.size() * moneyness_.size()) {
        throw ContractViolation("ChainDataset: quote count must equal |tenors| * |moneyness|");
    }
}

const RelativeQuote& ChainDataset::at(std::size_t tenor_index, std::size_t kappa_index) const {
    return quotes_.at(tenor_index * moneyness_.size() + kappa_index);
}

namespace {

double uniform_step(const std::vector<double>& v, const char* what) {
    if (v.size() < 2) return 0.0;
    const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs((v[i] - v[i - 1]) - step) > 1e-12) {
            throw ContractViolation(std::string("ChainDataset: nonuniform ") + what + " grid");
        }
    }
    return step;
}

} // namespace

double ChainDataset::tenor_step() const { return uniform_step(tenors_, "tenor"); }

double ChainDataset::moneyness_step() const { return uniform_step(moneyness_, "moneyness"); }

ChainDataset ChainDataset::from_quotes(std::vector<RelativeQuote> quotes) {
    std::vector<double> tenors;
    std::vector<double> kappas;
    for (const auto& q : quotes) {
        if (tenors.empty() || q.tau != tenors.back()) tenors.push_back(q.tau);
    }
    for (const auto& q : quotes) {
        if (q.tau != quotes.front().tau) break;
        kappas.push_back(q.kappa);
    }
    if (tenors.size() * kappas.size() != quotes.size()) {
        throw ContractViolation("ChainDataset: quotes do not form a row-major tenor x moneyness grid");
    }
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        for (std::size_t j = 0; j < kappas.size(); ++j) {
            const auto& q = quotes[i * kappas.size() + j];
            if (q.tau != tenors[i] || q.kappa != kappas[j]) {
                throw ContractViolation("ChainDataset: quotes do not form a row-major tenor x moneyness grid");
            }
        }
    }
    ChainDataset out(std::move(tenors), std::move(kappas), std::move(quotes));
    out.tenor_step();
    out.moneyness_step();
    return out;
}

ChainDataset generate_dataset(const GridSpec& grid, const LbTermStructure& ts) {
    const auto tenors = grid.tenors.points();
    const auto kappas = grid.moneyness.points();
    std::vector<RelativeQuote> quotes;
    quotes.reserve(tenors.size() * kappas.size());
    for (double tau : tenors) {
        const LbMarginal m = term_structure_eval(tau, ts);
        for (double kappa : kappas) quotes.push_back({tau, kappa, lb_price(kappa, m).otm});
    }
    return ChainDataset(tenors, kappas, std::move(quotes));
}

} // namespace shallowiv::market
