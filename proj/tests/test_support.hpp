#pragma once

// Shared helpers for the test binaries: a small simulator independent of
// power_lab and a grid-refinement maximizer used as an MLE oracle.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "nlh/hazard_models.hpp"
#include "nlh/survival_data.hpp"

namespace nlh::support {

// Inverse-transform draws, optional exponential censoring at rate c.
inline SurvivalSample draw(const HazardModel& m, const Vector& theta, int n, unsigned seed,
                           double censor_rate = 0.0) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> t;
  std::vector<int> d;
  for (int i = 0; i < n; ++i) {
    double x = m.inverse_cum_hazard(unit(rng), theta);
    int status = 1;
    if (censor_rate > 0.0) {
      const double c = unit(rng) / censor_rate;
      if (c < x) {
        x = c;
        status = 0;
      }
    }
    t.push_back(x);
    d.push_back(status);
  }
  return SurvivalSample::from_times(t, d);
}

// Maximizes f over a box by repeated 2-d grid refinement.
inline std::vector<double> grid_maximize(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> center, std::vector<double> half,
                                         int rounds = 60, int points = 11) {
  const std::size_t p = center.size();
  for (int r = 0; r < rounds; ++r) {
    std::vector<double> best = center;
    double best_value = f(center);
    std::vector<int> idx(p, 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(points, static_cast<double>(p)));
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t rem = k;
      std::vector<double> x(p);
      for (std::size_t i = 0; i < p; ++i) {
        const int j = static_cast<int>(rem % points);
        rem /= points;
        x[i] = center[i] + half[i] * (2.0 * j / (points - 1) - 1.0);
      }
      const double v = f(x);
      if (v > best_value) {
        best_value = v;
        best = x;
      }
    }
    center = best;
    for (auto& h : half) h *= 0.35;
  }
  return center;
}

}  // namespace nlh::support

#include <boost/math/quadrature/gauss.hpp>

namespace nlh::support {

// Gauss-Legendre on [lo, hi], geometrically graded towards lo when lo == 0.
inline double graded_integral(const std::function<double(double)>& f, double lo, double hi) {
  using rule = boost::math::quadrature::gauss<double, 30>;
  if (!(hi > lo)) return 0.0;
  if (lo > 0.0) return rule::integrate(f, lo, hi);
  double total = 0.0;
  double right = hi;
  for (int k = 0; k < 80; ++k) {
    const double left = 0.5 * right;
    total += rule::integrate(f, left, right);
    right = left;
  }
  return total;
}

// Type A / B kappa^2 (parametric plug-in) at t by direct quadrature of the
// defining integrals; no closed forms, no cum_score.
inline double kappa2_oracle(const HazardModel& m, const Vector& th, const SurvivalSample& s,
                            bool type_a, double t) {
  const RiskPath path = build_risk_path(s);
  const double n = static_cast<double>(s.n());
  const auto p = static_cast<Eigen::Index>(m.dim());
  double lead = 0.0;
  Vector c = Vector::Zero(p);
  Matrix sigma = Matrix::Zero(p, p);
  for (std::size_t g = 0; g < path.gap_count(); ++g) {
    const double y = path.gap_risk[g];
    if (y == 0) continue;
    const double lo = path.knots[g];
    const double hi = path.knots[g + 1];
    const double weight = type_a ? 1.0 : y / n;
    auto h = [&](double u) { return m.hazard(u, th); };
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        sigma(i, j) += y / n * graded_integral([&](double u) {
          const Vector psi = m.score(u, th);
          return psi[i] * psi[j] * h(u);
        }, lo, hi);
    const double top = std::min(hi, t);
    if (top <= lo) continue;
    lead += weight * weight * (n / y) * graded_integral(h, lo, top);
    for (Eigen::Index i = 0; i < p; ++i)
      c[i] += weight * graded_integral([&](double u) { return m.score(u, th)[i] * h(u); }, lo, top);
  }
  if (p == 0) return lead;
  return lead - c.dot(sigma.ldlt().solve(c));
}

}  // namespace nlh::support
