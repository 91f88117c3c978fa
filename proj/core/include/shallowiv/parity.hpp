#pragma once

// Density-volatility parity. Given the total implied volatility surface omega
// and its partials at a point, the market CDF and PDF follow from the
// Black-Scholes quasi-density through two correctors:
//
//   Psi  = Phi(z+) + zeta,          zeta = psi_BS * omega * d_k omega
//   psi  = psi_BS * xi,             xi   = (1 - k/omega d_k omega)^2
//                                          - (omega d_k omega)^2 / 4
//                                          + omega d_kk omega
//   d_t p = psi~_BS * omega * d_t omega
//
// where psi_BS = phi(z+)/omega and psi~_BS = phi(z-)/omega use the smile
// omega(tau, kappa) in place of a constant volatility. The static-arbitrage
// errors measure violations of d_t omega >= 0, Psi >= 0 and xi >= 0.

#include <string>
#include <vector>

#include "shallowiv/market.hpp"

namespace shallowiv::parity {

/// omega and its partials at (tau, kappa).
struct SurfaceJet {
    double tau = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double d_tau = 0.0;
    double d_kappa = 0.0;
    double d_kappa_kappa = 0.0;

    /// Throws DomainError unless omega > 0 and every entry is finite.
    void validate() const;
};

struct QuasiDensity {
    double pdf;         // phi(z+)/omega
    double tilted_pdf;  // phi(z-)/omega
    double cdf;         // Phi(z+)
};

QuasiDensity quasi_density(double tau, double kappa, double omega);

struct CorrectorBundle {
    double zeta;  // correction addend
    double xi;    // correction multiplier
    double quasi_pdf;
    double quasi_cdf;
    double tilted_quasi_pdf;
};

CorrectorBundle correctors(const SurfaceJet& jet);

/// Returned as-is even when outside [0, 1]; that is what the arbitrage errors measure.
double implied_cdf(const SurfaceJet& jet);
double implied_pdf(const SurfaceJet& jet);
/// d_tau of the relative put (equivalently OTM) price.
double calendar_density(const SurfaceJet& jet);

struct ArbitrageErrors {
    double calendar;
    double vertical;
    double butterfly;
};

ArbitrageErrors arbitrage_errors(const SurfaceJet& jet);

// ---------------------------------------------------------------------------
// Finite-difference audit of the parity identities against a pricing model

struct AuditOptions {
    std::vector<double> tenors{0.5, 1.0, 2.0};
    double kappa_lo = -0.8;
    double kappa_hi = 0.8;
    double kappa_step = 0.01;
    double fd_step = 1e-4;
};

struct AuditPoint {
    double tau;
    double kappa;
    double err_pdf;
    double err_cdf;
    double err_calendar;
    double eps_calendar;
    double eps_vertical;
    double eps_butterfly;
    double err_total_vega;  // dp/domega against phi(z-)
    double err_pivot;       // e^k phi(z+) against phi(z-)
};

struct SkippedPoint {
    double tau;
    double kappa;
    std::string reason;
};

struct AuditReport {
    std::vector<AuditPoint> points;
    std::vector<SkippedPoint> skipped;

    double max_err_pdf() const;
    double max_err_cdf() const;
    double max_err_calendar() const;
    double max_err_total_vega() const;
    double max_err_pivot() const;
    /// Largest of the pdf, cdf and calendar errors.
    double max_identity_error() const;
};

/// Relative error |a - b| / max(|b|, 1e-6).
double relative_error(double approx, double exact);

/// Inverts the model's implied volatility around each grid point, builds
/// jets with fourth-order central differences, and compares the parity
/// identities with the model's analytic density, distribution and the
/// finite-difference tenor slope of its prices.
AuditReport parity_audit(const market::PricingModel& model, const AuditOptions& options);

} // namespace shallowiv::parity
