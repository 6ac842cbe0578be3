#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlh/cox_parametric.hpp"

using namespace nlh;

namespace {

Subject subj(double t, int d, std::vector<double> z, double v = 0.0) {
  Subject s;
  s.exit_time = t;
  s.status = d;
  s.entry_time = v;
  s.covariates = std::move(z);
  return s;
}

SurvivalSample simulate(double theta, const Vector& beta, std::size_t n, unsigned seed, double censor = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::exponential_distribution<double> unit(1.0);
  std::vector<Subject> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(static_cast<std::size_t>(beta.size()));
    double lp = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = k == 0 ? (norm(rng) > 0 ? 1.0 : 0.0) : norm(rng);
      lp += beta[static_cast<Eigen::Index>(k)] * z[k];
    }
    const double t = unit(rng) / (theta * std::exp(lp));
    const double c = censor > 0 ? unit(rng) / censor : 1e300;
    out.push_back(subj(std::min(t, c), t <= c ? 1 : 0, z));
  }
  return SurvivalSample(out);
}

Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

}  // namespace

TEST(Cox, BinaryCovariateClosedForm) {
  SurvivalSample s({subj(1, 1, {0}), subj(1, 1, {0}), subj(0.5, 1, {1}), subj(0.5, 1, {1})});
  auto fit = fit_cox_exponential(s);
  EXPECT_NEAR(fit.theta_hat, 1.0, 1e-10);
  EXPECT_NEAR(fit.beta_hat[0], std::log(2.0), 1e-10);
}

TEST(Cox, NoCovariatesIsExponential) {
  SurvivalSample s({subj(0.5, 1, {}), subj(1.5, 0, {}), subj(2.0, 1, {}), subj(0.7, 1, {})});
  auto fit = fit_cox_exponential(s);
  EXPECT_NEAR(fit.theta_hat, 3.0 / 4.7, 1e-13);
  auto e = exponential_model();
  auto efit = fit_ml(*e, s);
  auto a = cox_curve_type_a(fit, s);
  auto ea = curve_type_a(*e, efit, s, VarianceFlavor::Parametric);
  auto b = cox_curve_type_b(fit, s);
  auto eb = curve_type_b(*e, efit, s, VarianceFlavor::Parametric);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.d_n[i], ea.d_n[i], 1e-12);
    EXPECT_NEAR(a.kappa2[i], ea.kappa2[i], 1e-12);
    EXPECT_NEAR(b.d_n[i], eb.d_n[i], 1e-12);
    EXPECT_NEAR(b.kappa2[i], eb.kappa2[i], 1e-12);
  }
}

TEST(Cox, ForcedZeroBetaMatchesExponential) {
  auto s = simulate(1.0, v2(0.5, -0.3), 80, 3);
  CoxOptions opt;
  opt.fixed_beta = Vector::Zero(2);
  auto fit = fit_cox_exponential(s, opt);
  auto e = exponential_model();
  auto efit = fit_ml(*e, s);
  EXPECT_NEAR(fit.theta_hat, efit.theta_hat[0], 1e-12);
  auto a = cox_curve_type_a(fit, s);
  auto ea = curve_type_a(*e, efit, s, VarianceFlavor::Parametric);
  auto b = cox_curve_type_b(fit, s);
  auto eb = curve_type_b(*e, efit, s, VarianceFlavor::Parametric);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.nlh[i], ea.nlh[i], 1e-10);
    if (eb.defined[i]) EXPECT_NEAR(b.nlh[i], eb.nlh[i], 1e-10);
  }
}

TEST(Cox, SigmaIsScaledNegativeHessian) {
  auto s = simulate(0.8, v2(0.5, -0.3), 150, 5);
  auto fit = fit_cox_exponential(s);
  const Vector x = fit.params();
  auto ll = [&](const Vector& y) { return cox_log_likelihood(s, y[0], y.tail(2)); };
  Matrix hess(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double hi = 1e-4 * std::max(1.0, std::abs(x[i]));
      const double hj = 1e-4 * std::max(1.0, std::abs(x[j]));
      Vector pp = x, pm = x, mp = x, mm = x;
      pp[i] += hi; pp[j] += hj;
      pm[i] += hi; pm[j] -= hj;
      mp[i] -= hi; mp[j] += hj;
      mm[i] -= hi; mm[j] -= hj;
      hess(i, j) = (ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4 * hi * hj);
    }
  const Matrix neg = -hess / static_cast<double>(s.n());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(fit.sigma(i, j), neg(i, j), 1e-6 * std::abs(neg(i, i)) + 1e-6);
}

TEST(Cox, TypeBEndsAtZero) {
  auto s = simulate(1.0, v2(0.5, -0.3), 200, 9, 0.0);
  auto fit = fit_cox_exponential(s);
  auto b = cox_curve_type_b(fit, s);
  EXPECT_NEAR(b.d_n.back(), 0.0, 1e-9);
}

TEST(Cox, RiskAveragesConvexHull) {
  auto s = simulate(1.0, v2(0.5, -0.3), 60, 11);
  auto fit = fit_cox_exponential(s);
  RiskAverages avg(s, fit.beta_hat);
  for (std::size_t g = 0; g + 1 < avg.knots().size(); ++g) {
    const double mid = 0.5 * (avg.knots()[g] + avg.knots()[g + 1]);
    double lo0 = 1e300, hi0 = -1e300;
    double lo1 = 1e300, hi1 = -1e300;
    bool any = false;
    for (const auto& sub : s.subjects())
      if (sub.entry_time < mid && sub.exit_time >= mid) {
        any = true;
        lo0 = std::min(lo0, sub.covariates[0]);
        hi0 = std::max(hi0, sub.covariates[0]);
        lo1 = std::min(lo1, sub.covariates[1]);
        hi1 = std::max(hi1, sub.covariates[1]);
      }
    if (!any) continue;
    const Vector e = avg.e(mid);
    EXPECT_GE(e[0], lo0 - 1e-12);
    EXPECT_LE(e[0], hi0 + 1e-12);
    EXPECT_GE(e[1], lo1 - 1e-12);
    EXPECT_LE(e[1], hi1 + 1e-12);
  }
}

TEST(Cox, KappaMatchesBruteForce) {
  // R(s) summed directly over subjects at gap midpoints; integrands are step functions
  auto s = simulate(1.3, v2(0.4, 0.2), 25, 17);
  auto fit = fit_cox_exponential(s);
  const double n = 25.0;
  const double th = fit.theta_hat;
  const Matrix sinv = fit.sigma.inverse();
  for (auto type : {PlotType::A, PlotType::B}) {
    auto c = type == PlotType::A ? cox_curve_type_a(fit, s) : cox_curve_type_b(fit, s);
    std::vector<double> cuts{0.0};
    for (const auto& sub : s.subjects()) cuts.push_back(sub.exit_time);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double t = c.times[i];
      double lead = 0.0;
      Vector cv = Vector::Zero(3);
      for (std::size_t k = 0; k + 1 < cuts.size() && cuts[k] < t; ++k) {
        const double lo = cuts[k], hi = std::min(cuts[k + 1], t);
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi);
        double r = 0.0;
        Vector r1 = Vector::Zero(2);
        for (const auto& sub : s.subjects())
          if (sub.exit_time >= mid) {
            const double w = std::exp(fit.beta_hat[0] * sub.covariates[0] + fit.beta_hat[1] * sub.covariates[1]);
            r += w / n;
            r1 += w * v2(sub.covariates[0], sub.covariates[1]) / n;
          }
        if (type == PlotType::A) {
          lead += th / r * (hi - lo);
          cv[0] += hi - lo;
          cv.tail(2) += th * r1 / r * (hi - lo);
        } else {
          lead += th * r * (hi - lo);
          cv[0] += r * (hi - lo);
          cv.tail(2) += th * r1 * (hi - lo);
        }
      }
      const double oracle = lead - cv.dot(sinv * cv);
      EXPECT_NEAR(c.kappa2[i], oracle, 1e-8 * std::max(1.0, std::abs(lead)));
    }
  }
}

TEST(Cox, SeparationReported) {
  SurvivalSample s({subj(1, 1, {0}), subj(2, 1, {0}), subj(1, 0, {1}), subj(2, 0, {1})});
  EXPECT_THROW(fit_cox_exponential(s), ModelError);
}

TEST(Cox, MonteCarloCoverage) {
  const Vector beta = v2(0.5, -0.3);
  int inside = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    auto s = simulate(1.0, beta, 500, 1000 + static_cast<unsigned>(r));
    auto fit = fit_cox_exponential(s);
    bool ok = true;
    for (int k = 0; k < 2; ++k)
      ok = ok && std::abs(fit.beta_hat[k] - beta[k]) <= 3.0 * fit.std_errors[k + 1];
    inside += ok;
  }
  EXPECT_GE(inside, 198);
}
