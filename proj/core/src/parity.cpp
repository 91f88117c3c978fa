#include "shallowiv/parity.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "shallowiv/errors.hpp"

namespace shallowiv::parity {

using market::pivots;
using special::normal_cdf;
using special::normal_pdf;

void SurfaceJet::validate() const {
    if (!std::isfinite(tau) || !std::isfinite(kappa) || !std::isfinite(omega) || !std::isfinite(d_tau) ||
        !std::isfinite(d_kappa) || !std::isfinite(d_kappa_kappa)) {
        throw DomainError("SurfaceJet: non-finite entry");
    }
    if (!(omega > 0.0)) throw DomainError("SurfaceJet: omega must be positive");
}

QuasiDensity quasi_density(double /*tau*/, double kappa, double omega) {
    if (!(omega > 0.0)) throw DomainError("quasi_density: omega must be positive");
    const auto z = pivots(kappa, omega);
    return {normal_pdf(z.plus) / omega, normal_pdf(z.minus) / omega, normal_cdf(z.plus)};
}

CorrectorBundle correctors(const SurfaceJet& jet) {
    jet.validate();
    const QuasiDensity q = quasi_density(jet.tau, jet.kappa, jet.omega);
    const double w = jet.omega;
    const double g = jet.d_kappa;
    const double skew = 1.0 - jet.kappa / w * g;
    const double wg = w * g;
    CorrectorBundle out{};
    out.zeta = q.pdf * w * g;
    out.xi = skew * skew - 0.25 * wg * wg + w * jet.d_kappa_kappa;
    out.quasi_pdf = q.pdf;
    out.quasi_cdf = q.cdf;
    out.tilted_quasi_pdf = q.tilted_pdf;
    return out;
}

double implied_cdf(const SurfaceJet& jet) {
    const auto c = correctors(jet);
    return c.quasi_cdf + c.zeta;
}

double implied_pdf(const SurfaceJet& jet) {
    const auto c = correctors(jet);
    return c.quasi_pdf * c.xi;
}

double calendar_density(const SurfaceJet& jet) {
    jet.validate();
    const QuasiDensity q = quasi_density(jet.tau, jet.kappa, jet.omega);
    return q.tilted_pdf * jet.omega * jet.d_tau;
}

ArbitrageErrors arbitrage_errors(const SurfaceJet& jet) {
    const auto c = correctors(jet);
    return {std::max(0.0, -jet.d_tau), std::max(0.0, -c.quasi_cdf - c.zeta), std::max(0.0, -c.xi)};
}

// ---------------------------------------------------------------------------

double relative_error(double approx, double exact) {
    return std::abs(approx - exact) / std::max(std::abs(exact), 1e-6);
}

namespace {

template <typename F>
double max_of(const std::vector<AuditPoint>& pts, F field) {
    double m = 0.0;
    for (const auto& p : pts) m = std::max(m, field(p));
    return m;
}

// Fourth-order central stencils on f(-2h), f(-h), f(0), f(h), f(2h).
struct Stencil {
    double m2, m1, c, p1, p2;

    double first(double h) const { return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h); }
    double second(double h) const { return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h); }
};

template <typename F>
Stencil sample(F f, double x, double h) {
    return {f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h)};
}

} // namespace

double AuditReport::max_err_pdf() const { return max_of(points, [](const auto& p) { return p.err_pdf; }); }
double AuditReport::max_err_cdf() const { return max_of(points, [](const auto& p) { return p.err_cdf; }); }
double AuditReport::max_err_calendar() const {
    return max_of(points, [](const auto& p) { return p.err_calendar; });
}
double AuditReport::max_err_total_vega() const {
    return max_of(points, [](const auto& p) { return p.err_total_vega; });
}
double AuditReport::max_err_pivot() const { return max_of(points, [](const auto& p) { return p.err_pivot; }); }
double AuditReport::max_identity_error() const {
    return std::max({max_err_pdf(), max_err_cdf(), max_err_calendar()});
}

AuditReport parity_audit(const market::PricingModel& model, const AuditOptions& options) {
    if (!(options.fd_step > 0.0)) throw DomainError("parity_audit: fd step must be positive");
    const market::UniformGrid kgrid{options.kappa_lo, options.kappa_hi, options.kappa_step};
    const double h = options.fd_step;

    AuditReport report;
    for (double tau : options.tenors) {
        if (!(tau - 2.0 * h > 0.0)) {
            report.skipped.push_back({tau, 0.0, "tenor too close to zero for the stencil"});
            continue;
        }
        for (std::size_t i = 0; i < kgrid.size(); ++i) {
            const double kappa = kgrid.at(i);
            try {
                const Stencil in_tau = sample([&](double t) { return model.total_vol(t, kappa); }, tau, h);
                const Stencil in_kappa = sample([&](double k) { return model.total_vol(tau, k); }, kappa, h);
                const Stencil price_tau = sample([&](double t) { return model.price(t, kappa).otm; }, tau, h);

                SurfaceJet jet{tau, kappa, in_kappa.c, in_tau.first(h), in_kappa.first(h), in_kappa.second(h)};
                jet.validate();

                AuditPoint pt{};
                pt.tau = tau;
                pt.kappa = kappa;
                pt.err_pdf = relative_error(implied_pdf(jet), model.pdf(tau, kappa));
                pt.err_cdf = relative_error(implied_cdf(jet), model.cdf(tau, kappa));
                pt.err_calendar = relative_error(calendar_density(jet), price_tau.first(h));
                const auto eps = arbitrage_errors(jet);
                pt.eps_calendar = eps.calendar;
                pt.eps_vertical = eps.vertical;
                pt.eps_butterfly = eps.butterfly;

                const double w = jet.omega;
                const auto z = pivots(kappa, w);
                const double vega_h = std::min(h, 0.25 * w);
                const Stencil in_omega = sample([&](double ww) { return market::bs_otm(tau, kappa, ww); }, w, vega_h);
                pt.err_total_vega = relative_error(in_omega.first(vega_h), normal_pdf(z.minus));
                pt.err_pivot = relative_error(std::exp(kappa) * normal_pdf(z.plus), normal_pdf(z.minus));
                report.points.push_back(pt);
            } catch (const std::exception& e) {
                report.skipped.push_back({tau, kappa, e.what()});
            }
        }
    }
    return report;
}

} // namespace shallowiv::parity
