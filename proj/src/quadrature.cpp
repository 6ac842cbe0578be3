#include "nlh/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace nlh::quad {

double integrate(const Integrand& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol);
}

double integrate_singular(const Integrand& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule.integrate(f, a, b, rel_tol);
}

double integrate_singular(const Integrand& f, double a, double b, const std::vector<double>& breaks,
                          double rel_tol) {
  double total = 0.0, lo = a;
  for (double k : breaks)
    if (k > lo && k < b) {
      total += integrate_singular(f, lo, k, rel_tol);
      lo = k;
    }
  return total + integrate_singular(f, lo, b, rel_tol);
}

double integrate_to_infinity(const Integrand& f, double a, double rel_tol) {
  thread_local boost::math::quadrature::exp_sinh<double> rule;
  return rule.integrate([&](double w) { return f(a + w); }, rel_tol);
}

}  // namespace nlh::quad
