#pragma once

// Dimensionless option pricing: coordinate transforms, Black-Scholes in total
// volatility, the additive logistic (logistic-beta) benchmark market, and
// synthetic option-chain generation.
//
// Conventions. tau is the tenor in years, kappa = ln(K/F) the log-forward
// moneyness, omega the total implied volatility sigma*sqrt(tau). Prices are
// relative to the dividend-adjusted spot, so a put is worth at most e^kappa
// and a call at most 1. The out-of-the-money price is the put for kappa <= 0
// and the call for kappa > 0.

#include <cstddef>
#include <string>
#include <vector>

#include "shallowiv/special.hpp"

namespace shallowiv::market {

using special::Probability;

double to_moneyness(double strike, double forward);
double to_relative_price(double dollar_price, double spot, double dividend_discount);

// ---------------------------------------------------------------------------
// Black-Scholes in total volatility

/// Pivots z+ = (kappa + omega^2/2)/omega and z- = (kappa - omega^2/2)/omega.
struct Pivots {
    double plus;
    double minus;
};
Pivots pivots(double kappa, double omega);

double bs_put(double tau, double kappa, double omega);
double bs_call(double tau, double kappa, double omega);
double bs_otm(double tau, double kappa, double omega);
/// dPrice/dsigma = phi(z-) sqrt(tau); identical for puts and calls.
double bs_vega(double tau, double kappa, double omega);

/// Total volatility reproducing an out-of-the-money price. Safeguarded Newton
/// with bisection fallback on the bracket (1e-8, 10].
double implied_total_vol(double tau, double kappa, double otm_price);

// ---------------------------------------------------------------------------
// Logistic-beta marginals

/// LB(mu, dispersion, alpha, beta): X = mu + dispersion * Z with Z standard
/// logistic-beta. alpha shapes the left tail, beta the right one.
struct LbMarginal {
    double mu = 0.0;
    double dispersion = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    /// Build a risk-neutral marginal (location fixed by martingality).
    static LbMarginal risk_neutral(double dispersion, double alpha, double beta);
};

/// mu such that E[exp(X)] = 1.
double lb_location(double dispersion, double alpha, double beta);

double lb_pdf(double x, const LbMarginal& m);
Probability lb_cdf(double x, const LbMarginal& m);
/// Esscher-tilted density exp(x) * lb_pdf(x); shapes shift to (alpha+s, beta-s).
double lb_tilted_pdf(double x, const LbMarginal& m);
Probability lb_tilted_cdf(double x, const LbMarginal& m);

struct LbMoments {
    double mean;
    double variance;
    double skewness;
    double excess_kurtosis;
};
LbMoments lb_moments(const LbMarginal& m);

/// Dispersion giving variance V for fixed shapes.
double lb_dispersion_for_variance(double variance, double alpha, double beta);

struct OptionPrices {
    double put;
    double call;
    double otm;
};
OptionPrices lb_price(double kappa, const LbMarginal& m);

// ---------------------------------------------------------------------------
// Term structure

/// s(tau) = sigma0 tau^h0, alpha(tau) = alpha1 + (alpha0 - alpha1)/(1 + s),
/// beta(tau) = beta1 + (beta0 - beta1)/(1 + s) + s.
struct LbTermStructure {
    double sigma0 = 0.15;
    double h0 = 0.5;
    double alpha0 = 0.5;
    double alpha1 = 1.0;
    double beta0 = 1.0;
    double beta1 = 1.0;

    double dispersion(double tau) const;
    /// Raw parameter curves at tau, no validity checks.
    LbMarginal raw(double tau) const;
};

LbMarginal term_structure_eval(double tau, const LbTermStructure& ts);
OptionPrices lb_price(double tau, double kappa, const LbTermStructure& ts);

/// Admissibility conditions of the term structure:
///   (i)   dispersion < beta
///   (ii)  alpha > 0 and beta > 0
///   (iii) dispersion nondecreasing, zero at tau = 0, positive after
///   (iv)  alpha/dispersion and beta/dispersion nonincreasing
struct TermStructureViolation {
    int condition;  // 1..4
    double tau;
    std::string detail;
};

std::vector<TermStructureViolation> check_term_structure(const LbTermStructure& ts, double tau_lo,
                                                         double tau_hi, double step);

/// Roman numeral label "(i)".."(iv)" used in diagnostics.
std::string condition_label(int condition);

// ---------------------------------------------------------------------------
// Pricing models seen through prices, densities and implied volatility

class PricingModel {
  public:
    virtual ~PricingModel() = default;
    virtual OptionPrices price(double tau, double kappa) const = 0;
    virtual double pdf(double tau, double x) const = 0;
    virtual double cdf(double tau, double x) const = 0;
    /// Defaults to inverting the out-of-the-money price.
    virtual double total_vol(double tau, double kappa) const;
};

class LbMarket final : public PricingModel {
  public:
    explicit LbMarket(LbTermStructure ts) : ts_(ts) {}
    const LbTermStructure& term_structure() const { return ts_; }
    OptionPrices price(double tau, double kappa) const override;
    double pdf(double tau, double x) const override;
    double cdf(double tau, double x) const override;

  private:
    LbTermStructure ts_;
};

/// Black-Scholes market with constant volatility; omega = sigma sqrt(tau).
class FlatBsMarket final : public PricingModel {
  public:
    explicit FlatBsMarket(double sigma);
    OptionPrices price(double tau, double kappa) const override;
    double pdf(double tau, double x) const override;
    double cdf(double tau, double x) const override;
    double total_vol(double tau, double kappa) const override;

  private:
    double sigma_;
};

// ---------------------------------------------------------------------------
// Synthetic option chains

struct UniformGrid {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::size_t size() const;
    double at(std::size_t i) const;
    std::vector<double> points() const;
};

struct GridSpec {
    UniformGrid tenors;
    UniformGrid moneyness;

    /// 20 tenors 0.1..2 by 0.1, 201 moneynesses -1..1 by 0.01.
    static GridSpec training();
    /// 191 tenors 0.1..2 by 0.01, 2001 moneynesses -1..1 by 0.001.
    static GridSpec validation();
};

struct RelativeQuote {
    double tau;
    double kappa;
    double price;  // out-of-the-money relative price
};

/// Dense tenor x moneyness chain, stored row-major (tenor outer).
class ChainDataset {
  public:
    ChainDataset() = default;
    ChainDataset(std::vector<double> tenors, std::vector<double> moneyness, std::vector<RelativeQuote> quotes);

    const std::vector<double>& tenors() const { return tenors_; }
    const std::vector<double>& moneyness() const { return moneyness_; }
    const std::vector<RelativeQuote>& quotes() const { return quotes_; }
    std::size_t size() const { return quotes_.size(); }
    bool empty() const { return quotes_.empty(); }
    const RelativeQuote& operator[](std::size_t i) const { return quotes_[i]; }
    const RelativeQuote& at(std::size_t tenor_index, std::size_t kappa_index) const;

    double tenor_step() const;
    double moneyness_step() const;

    /// Rebuild grid metadata from a flat quote list; throws ContractViolation
    /// unless the quotes form a full Cartesian grid with uniform steps.
    static ChainDataset from_quotes(std::vector<RelativeQuote> quotes);

  private:
    std::vector<double> tenors_;
    std::vector<double> moneyness_;
    std::vector<RelativeQuote> quotes_;
};

ChainDataset generate_dataset(const GridSpec& grid, const LbTermStructure& ts);

} // namespace shallowiv::market
