#pragma once

namespace shallowiv::special::detail {

// I_x(a,b) with x and y = 1 - x (and their logs) supplied separately so the
// caller can keep full precision on whichever one is tiny.
double reg_inc_beta_split(double x, double y, double log_x, double log_y, double a, double b);

// I_{Phi_L(z)}(a, b) without forming 1 - Phi_L(z) by subtraction.
double reg_inc_beta_logistic(double z, double a, double b);

} // namespace shallowiv::special::detail
