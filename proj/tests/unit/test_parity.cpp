#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "shallowiv/errors.hpp"
#include "shallowiv/parity.hpp"
#include "shallowiv/special.hpp"

using namespace shallowiv;
using namespace shallowiv::parity;
using shallowiv::testing::derivative;
using shallowiv::testing::second_derivative;

namespace {

// Smooth skewed smile with a term structure, used as an analytic surface.
double smile(double tau, double kappa) {
    const double s = 0.2 + 0.05 * tau;
    return std::sqrt(tau) * (s - 0.08 * kappa + 0.12 * kappa * kappa);
}

SurfaceJet smile_jet(double tau, double kappa) {
    const double h = 1e-3;
    return {tau,
            kappa,
            smile(tau, kappa),
            derivative([&](double t) { return smile(t, kappa); }, tau, h),
            derivative([&](double k) { return smile(tau, k); }, kappa, h),
            second_derivative([&](double k) { return smile(tau, k); }, kappa, h)};
}

double put_on_smile(double tau, double kappa) { return market::bs_put(tau, kappa, smile(tau, kappa)); }

} // namespace

TEST(CorrectorTest, ConstantSmileIsExactlyTrivial) {
    for (double tau : {0.1, 0.5, 2.0}) {
        for (double k : {-0.9, -0.1, 0.0, 0.35, 1.0}) {
            const SurfaceJet jet{tau, k, 0.3 * std::sqrt(tau), 0.15 / std::sqrt(tau), 0.0, 0.0};
            const auto c = correctors(jet);
            const auto q = quasi_density(tau, k, jet.omega);
            EXPECT_EQ(c.zeta, 0.0);
            EXPECT_EQ(c.xi, 1.0);
            EXPECT_EQ(implied_pdf(jet), q.pdf);
            EXPECT_EQ(implied_cdf(jet), q.cdf);
            const auto e = arbitrage_errors(jet);
            EXPECT_EQ(e.calendar, 0.0);
            EXPECT_EQ(e.vertical, 0.0);
            EXPECT_EQ(e.butterfly, 0.0);
        }
    }
}

TEST(CorrectorTest, QuasiDensityIsBlackScholes) {
    const auto q = quasi_density(1.0, 0.1, 0.25);
    const auto z = market::pivots(0.1, 0.25);
    EXPECT_DOUBLE_EQ(q.pdf, special::normal_pdf(z.plus) / 0.25);
    EXPECT_DOUBLE_EQ(q.tilted_pdf, special::normal_pdf(z.minus) / 0.25);
    EXPECT_NEAR(std::exp(0.1) * q.pdf, q.tilted_pdf, 1e-15);
}

TEST(CorrectorTest, CdfMatchesStrikeSlopeOfPrices) {
    // d_k p = e^k Psi
    for (double tau : {0.3, 1.0, 1.7}) {
        for (double k : {-0.6, -0.2, 0.0, 0.25, 0.7}) {
            const double dp = derivative([&](double x) { return put_on_smile(tau, x); }, k, 1e-3);
            EXPECT_NEAR(implied_cdf(smile_jet(tau, k)), std::exp(-k) * dp, 1e-9) << tau << ' ' << k;
        }
    }
}

TEST(CorrectorTest, PdfMatchesStrikeCurvatureOfPrices) {
    // d_kk p = e^k (Psi + psi)
    for (double tau : {0.3, 1.0, 1.7}) {
        for (double k : {-0.6, -0.2, 0.0, 0.25, 0.7}) {
            const double ddp = second_derivative([&](double x) { return put_on_smile(tau, x); }, k, 1e-3);
            const auto jet = smile_jet(tau, k);
            EXPECT_NEAR(implied_pdf(jet), std::exp(-k) * ddp - implied_cdf(jet), 1e-7) << tau << ' ' << k;
        }
    }
}

TEST(CorrectorTest, CalendarDensityMatchesTenorSlope) {
    for (double tau : {0.3, 1.0}) {
        for (double k : {-0.4, 0.0, 0.5}) {
            const double dp = derivative([&](double t) { return put_on_smile(t, k); }, tau, 1e-3);
            EXPECT_NEAR(calendar_density(smile_jet(tau, k)), dp, 1e-10);
        }
    }
}

TEST(ArbitrageTest, HingesOnViolations) {
    SurfaceJet jet{1.0, 0.0, 0.2, -0.05, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(arbitrage_errors(jet).calendar, 0.05);
    // strong negative curvature drives xi below zero
    jet = {1.0, 0.0, 0.2, 0.1, 0.0, -10.0};
    EXPECT_DOUBLE_EQ(arbitrage_errors(jet).butterfly, -correctors(jet).xi);
    EXPECT_GT(arbitrage_errors(jet).butterfly, 0.0);
    // a steep negative skew at the money pushes Psi below zero
    jet = {1.0, 0.0, 0.2, 0.1, -3.0, 0.0};
    EXPECT_GT(arbitrage_errors(jet).vertical, 0.0);
    EXPECT_DOUBLE_EQ(arbitrage_errors(jet).vertical, -implied_cdf(jet));
}

TEST(JetTest, ValidateRejectsBadInput) {
    EXPECT_THROW((SurfaceJet{1.0, 0.0, 0.0, 0.0, 0.0, 0.0}.validate()), DomainError);
    EXPECT_THROW((SurfaceJet{1.0, 0.0, 0.2, NAN, 0.0, 0.0}.validate()), DomainError);
    EXPECT_NO_THROW((SurfaceJet{1.0, 0.0, 0.2, 0.0, 0.0, 0.0}.validate()));
}

TEST(AuditTest, FlatMarketIsExact) {
    const market::FlatBsMarket flat(0.25);
    const auto r = parity_audit(flat, AuditOptions{});
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_EQ(r.points.size(), 3u * 161u);
    EXPECT_LE(r.max_err_pdf(), 1e-9);
    EXPECT_LE(r.max_err_cdf(), 1e-9);
    EXPECT_LE(r.max_err_calendar(), 1e-9);
    EXPECT_LE(r.max_err_total_vega(), 1e-7);
    EXPECT_LE(r.max_err_pivot(), 1e-12);
}

TEST(AuditTest, LogisticBetaMarketWithinTolerance) {
    AuditOptions o;
    o.kappa_step = 0.1;
    const auto r = parity_audit(market::LbMarket{market::LbTermStructure{}}, o);
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_LE(r.max_identity_error(), 1e-3);
    EXPECT_LE(r.max_err_total_vega(), 1e-7);
    EXPECT_LE(r.max_err_pivot(), 1e-7);
    for (const auto& p : r.points) {
        EXPECT_EQ(p.eps_calendar, 0.0);
        EXPECT_EQ(p.eps_vertical, 0.0);
        EXPECT_EQ(p.eps_butterfly, 0.0);
    }
}

TEST(AuditTest, CoarseStepExceedsTolerance) {
    AuditOptions o;
    o.fd_step = 1e-1;
    const auto r = parity_audit(market::LbMarket{market::LbTermStructure{}}, o);
    EXPECT_GT(r.max_identity_error(), 1e-3);
}

TEST(AuditTest, RelativeErrorFloor) {
    EXPECT_DOUBLE_EQ(relative_error(1.1, 1.0), 0.10000000000000009);
    EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-3);
}
