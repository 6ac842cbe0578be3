#pragma once

namespace nlh::special {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

// Regularized lower incomplete gamma P(a, x) = F0(x, a).
double gamma_p(double a, double x);
// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);
// log Q(a, x), finite far into the tail where Q itself underflows.
double log_gamma_q(double a, double x);

// F0*(x, a) = \int_0^x log(u) u^{a-1} e^{-u} du / Gamma(a).
double log_weighted_gamma_lower(double x, double a);
// \int_x^inf log(u) u^{a-1} e^{-u} du / Gamma(a), divided by Q(a, x).
// This is the conditional mean of log U given U > x for U ~ Gamma(a, 1).
double conditional_log_mean_upper(double x, double a);

double digamma(double x);

double normal_pdf(double x);
double normal_cdf(double x);
double chi_square_cdf(double x, double dof);
double chi_square_sf(double x, double dof);

}  // namespace nlh::special
