#pragma once

// Scalar special functions used by the pricing, density and parity layers.
//
// Everything here is double precision and pure. Algorithms:
//   * normal cdf        : complementary error function from <cmath>
//   * log-gamma         : Lanczos approximation, g = 7, nine coefficients
//   * incomplete beta   : continued fraction (modified Lentz), evaluated on
//                         whichever tail converges faster
//   * polygamma n<=3    : upward recurrence to x >= 16, then the asymptotic
//                         Bernoulli series

namespace shallowiv::special {

/// Value in [0, 1]; thin wrapper so signatures say what they return.
struct Probability {
    double value = 0.0;
    constexpr operator double() const noexcept { return value; }
};

double normal_pdf(double z);
Probability normal_cdf(double z);

double logistic_pdf(double z);
Probability logistic_cdf(double z);
/// ln Phi_L(z), accurate for very negative z.
double log_logistic_cdf(double z);

/// ln Gamma(x) for x > 0.
double log_gamma(double x);
/// ln B(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b).
Probability reg_inc_beta(double x, double a, double b);

/// Polygamma of order n in {0, 1, 2, 3}; order 0 is the digamma function.
double polygamma(int n, double x);

} // namespace shallowiv::special
