#pragma once

#include <functional>
#include <vector>

namespace nlh::quad {

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod on a finite interval; for smooth integrands.
double integrate(const Integrand& f, double a, double b, double rel_tol = 1e-12);

// Double-exponential rule tolerant of integrable endpoint singularities.
double integrate_singular(const Integrand& f, double a, double b, double rel_tol = 1e-12);
// Same, split at the breaks that fall inside (a, b).
double integrate_singular(const Integrand& f, double a, double b, const std::vector<double>& breaks,
                          double rel_tol = 1e-12);

// \int_a^inf f.
double integrate_to_infinity(const Integrand& f, double a, double rel_tol = 1e-12);

}  // namespace nlh::quad
