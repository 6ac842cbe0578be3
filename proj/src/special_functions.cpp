#include "nlh/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlh/quadrature.hpp"

namespace nlh::special {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxTerms = 100000;

// Series  sum_k x^k / (a (a+1) ... (a+k)), the bracket in P(a,x) = x^a e^-x / Gamma(a) * S.
double lower_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int k = 0; k < kMaxTerms; ++k) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) return sum;
  }
  throw std::runtime_error("gamma series failed to converge");
}

// Modified Lentz continued fraction for Q(a,x) e^x x^-a Gamma(a).
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("gamma continued fraction failed to converge");
}

void check_args(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("incomplete gamma: shape must be positive");
  if (!(x >= 0.0)) throw std::domain_error("incomplete gamma: x must be >= 0");
}

double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

}  // namespace

double gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::exp(log_prefactor(a, x)) * lower_series(a, x);
  return 1.0 - std::exp(log_prefactor(a, x)) * upper_fraction(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - std::exp(log_prefactor(a, x)) * lower_series(a, x);
  return std::exp(log_prefactor(a, x)) * upper_fraction(a, x);
}

double log_gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::log1p(-std::exp(log_prefactor(a, x)) * lower_series(a, x));
  return log_prefactor(a, x) + std::log(upper_fraction(a, x));
}

// d/da of the lower series gives the log-weighted integral:
//   Gamma(a) F0*(x,a) = log(x) gamma(a,x) - x^a e^-x sum_k c_k S_k,
// with c_k = x^k / prod_{i<=k}(a+i) and S_k = sum_{i<=k} 1/(a+i).
double log_weighted_gamma_lower(double x, double a) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  double ap = a;
  double c = 1.0 / a;
  double s = 1.0 / a;
  double sum_c = c;
  double sum_cs = c * s;
  for (int k = 1; k < kMaxTerms; ++k) {
    ap += 1.0;
    c *= x / ap;
    s += 1.0 / ap;
    sum_c += c;
    sum_cs += c * s;
    if (c * s < sum_cs * kEps && c < sum_c * kEps) {
      const double pre = std::exp(log_prefactor(a, x));
      return pre * (std::log(x) * sum_c - sum_cs);
    }
  }
  throw std::runtime_error("log-weighted gamma series failed to converge");
}

double conditional_log_mean_upper(double x, double a) {
  check_args(a, x);
  if (x < a + 1.0) {
    const double q = gamma_q(a, x);
    return (digamma(a) - log_weighted_gamma_lower(x, a)) / q;
  }
  // \int_0^inf log(x+w) (1+w/x)^{a-1} e^{-w} dw scaled by x^{a-1} e^{-x} / (Gamma(a) Q).
  const double scaled = quad::integrate_to_infinity(
      [&](double w) { return std::log(x + w) * std::exp((a - 1.0) * std::log1p(w / x) - w); },
      0.0, 1e-13);
  const double log_ratio = (a - 1.0) * std::log(x) - x - std::lgamma(a) - log_gamma_q(a, x);
  return scaled * std::exp(log_ratio);
}

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic expansion with Bernoulli coefficients.
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                       inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 -
                                         inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi_square_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace nlh::special
