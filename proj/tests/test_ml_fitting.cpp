#include <gtest/gtest.h>

#include <cmath>

#include "nlh/ml_fitting.hpp"
#include "test_support.hpp"

using namespace nlh;

namespace {

SurvivalSample sample(std::vector<double> t, std::vector<int> d, std::vector<double> v = {}) {
  return SurvivalSample::from_times(t, d, v);
}

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

// Maximizer of the log-likelihood over the free scale, independent of the Newton code.
Vector oracle(const HazardModel& m, const SurvivalSample& s, const Vector& near,
              std::optional<WeightWindow> w = std::nullopt) {
  const Vector eta0 = m.to_free(near);
  auto f = [&](const std::vector<double>& e) {
    Vector eta(2);
    eta << e[0], e[1];
    const Vector th = m.from_free(eta);
    if (!m.admissible(th)) return -1e300;
    try {
      return log_likelihood(m, th, s, w);
    } catch (...) {
      return -1e300;
    }
  };
  auto best = support::grid_maximize(f, {eta0[0], eta0[1]}, {0.5, 0.5});
  Vector eta(2);
  eta << best[0], best[1];
  return m.from_free(eta);
}

}  // namespace

TEST(LogLik, Examples) {
  auto e = exponential_model();
  EXPECT_NEAR(log_likelihood(*e, v1(0.5), sample({1, 2, 3}, {1, 1, 1})),
              3 * std::log(0.5) - 3.0, 1e-14);
  EXPECT_NEAR(log_likelihood(*e, v1(0.5), sample({1, 2, 3}, {1, 1, 1})), -5.0794415416798, 1e-12);
  EXPECT_NEAR(log_likelihood(*e, v1(0.5), sample({1, 2, 3, 2}, {1, 1, 1, 0})),
              3 * std::log(0.5) - 4.0, 1e-14);
  EXPECT_NEAR(log_likelihood(*e, v1(1.0), sample({2}, {1}, {1})), -1.0, 1e-15);
  EXPECT_THROW(log_likelihood(*e, v1(-1.0), sample({2}, {1})), ModelError);
}

TEST(FitMl, ExponentialClosedForm) {
  auto e = exponential_model();
  auto r = fit_ml(*e, sample({1, 2, 3}, {1, 1, 1}));
  EXPECT_TRUE(r.converged);
  EXPECT_DOUBLE_EQ(r.theta_hat[0], 0.5);
  // sigma^2 = n^{-1} (sum t)^2 / sum delta = 1 / theta^2 when uncensored
  EXPECT_NEAR(r.sigma_pm(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(r.sigma_np(0, 0), 4.0, 1e-14);
  EXPECT_NEAR(r.cov(0, 0), 1.0 / 12.0, 1e-15);  // 1 / (n Sigma)
  auto c = fit_ml(*e, sample({1, 2, 3}, {1, 0, 1}));
  EXPECT_NEAR(c.theta_hat[0], 1.0 / 3.0, 1e-15);
  EXPECT_THROW(fit_ml(*e, sample({1, 2}, {0, 0})), ModelError);
}

TEST(FitMl, WeibullMatchesGridOracle) {
  auto w = weibull_model();
  auto s = support::draw(*w, v2(10, 1.3), 200, 7);
  auto r = fit_ml(*w, s);
  ASSERT_TRUE(r.converged) << r.message;
  const Vector o = oracle(*w, s, r.theta_hat);
  EXPECT_NEAR(r.theta_hat[0], o[0], 1e-4);
  EXPECT_NEAR(r.theta_hat[1], o[1], 1e-4);
  // score is zero at the optimum
  EXPECT_LT(likelihood_score(*w, r.theta_hat, s).cwiseAbs().maxCoeff(), 1e-6 * 200);
}

TEST(FitMl, OtherFamiliesMatchGridOracle) {
  struct Case {
    ModelPtr m;
    Vector truth;
  };
  std::vector<Case> cases{{gompertz_model(), v2(0.5, 0.8)},
                          {simple_frailty_model(0.05), v2(1.0, 0.7)},
                          {gamma_model(), v2(2.0, 1.5)}};
  unsigned seed = 21;
  for (auto& c : cases) {
    auto s = support::draw(*c.m, c.truth, 200, seed++, 0.2);
    auto r = fit_ml(*c.m, s);
    ASSERT_TRUE(r.converged) << c.m->id() << " " << r.message;
    const Vector o = oracle(*c.m, s, r.theta_hat);
    EXPECT_NEAR(r.theta_hat[0], o[0], 1e-4) << c.m->id();
    EXPECT_NEAR(r.theta_hat[1], o[1], 1e-4) << c.m->id();
  }
}

TEST(FitMl, StartingPointInvariance) {
  auto w = weibull_model();
  auto s = support::draw(*w, v2(2, 0.8), 150, 3, 0.3);
  auto a = fit_ml(*w, s);
  FitOptions o;
  o.init = v2(0.3, 2.5);
  auto b = fit_ml(*w, s, o);
  EXPECT_NEAR(a.theta_hat[0], b.theta_hat[0], 1e-6);
  EXPECT_NEAR(a.theta_hat[1], b.theta_hat[1], 1e-6);
}

TEST(FitMl, Degenerate) {
  auto w = weibull_model();
  EXPECT_THROW(fit_ml(*w, sample({1.0, 2.0}, {1, 0})), ModelError);
  EXPECT_THROW(fit_profile(*w, sample({1.0, 1.0, 2.0}, {1, 1, 0})), ModelError);
}

TEST(FitMl, DelayedEntry) {
  auto e = exponential_model();
  auto r = fit_ml(*e, sample({2, 3}, {1, 1}, {1, 0}));
  EXPECT_NEAR(r.theta_hat[0], 2.0 / 4.0, 1e-15);
  auto w = weibull_model();
  auto s = support::draw(*w, v2(1, 1.5), 120, 9);
  std::vector<Subject> subs = s.subjects();
  for (std::size_t i = 0; i < subs.size(); i += 3) subs[i].entry_time = 0.3 * subs[i].exit_time;
  SurvivalSample trunc(subs);
  auto r2 = fit_ml(*w, trunc);
  ASSERT_TRUE(r2.converged);
  EXPECT_LT(likelihood_score(*w, r2.theta_hat, trunc).cwiseAbs().maxCoeff(), 1e-6 * 120);
}

TEST(FitProfile, AgreesWithNewton) {
  for (auto m : {weibull_model(), gompertz_model(), simple_frailty_model(0.05)}) {
    auto s = support::draw(*m, v2(1.2, m->id() == "weibull" ? 1.4 : 0.5), 300, 5, 0.2);
    auto a = fit_ml(*m, s);
    auto b = fit_profile(*m, s);
    EXPECT_NEAR(a.theta_hat[0], b.theta_hat[0], 1e-5 * std::max(1.0, a.theta_hat[0])) << m->id();
    EXPECT_NEAR(a.theta_hat[1], b.theta_hat[1], 1e-5 * std::max(1.0, std::abs(a.theta_hat[1])))
        << m->id();
  }
}

TEST(FitProfile, FixedBeta) {
  auto w = weibull_model();
  auto s = sample({1, 2, 3}, {1, 1, 1});
  FitOptions o;
  o.init = v2(1.0, 2.0);
  o.fixed = {false, true};
  auto r = fit_profile(*w, s, o);
  EXPECT_NEAR(r.theta_hat[0], 3.0 / 14.0, 1e-15);
  EXPECT_EQ(r.theta_hat[1], 2.0);
  auto r2 = fit_ml(*w, s, o);
  EXPECT_NEAR(r2.theta_hat[0], 3.0 / 14.0, 1e-9);
  EXPECT_EQ(r2.cov(1, 1), 0.0);
}

TEST(Sigma, WeibullHandValues) {
  auto w = weibull_model();
  auto s = sample({1, 2}, {1, 1});
  const Matrix sp = sigma_parametric(*w, v2(1, 1), s);
  EXPECT_NEAR(sp(0, 0), 1.5, 1e-15);
  // theta=beta=1: Sigma12 = n^{-1} sum t log t, Sigma22 = n^{-1} sum t (1 + log^2 t)
  EXPECT_NEAR(sp(0, 1), 0.5 * 2 * std::log(2.0), 1e-14);
  EXPECT_NEAR(sp(1, 1), 0.5 * (1 + 2 * (1 + std::log(2.0) * std::log(2.0))), 1e-14);
}

TEST(Sigma, GompertzQuadratureMatchesClosedForm) {
  auto g = gompertz_model();
  auto s = support::draw(*g, v2(0.5, 0.8), 40, 2, 0.3);
  const Vector th = v2(0.6, 0.7);
  const Matrix closed = sigma_parametric(*g, th, s);
  Matrix quad = Matrix::Zero(2, 2);
  for (const auto& sub : s.subjects()) quad += g->HazardModel::info_integral(sub.exit_time, th);
  quad /= 40.0;
  EXPECT_LT((closed - quad).cwiseAbs().maxCoeff(), 1e-8 * closed.cwiseAbs().maxCoeff());
}

TEST(Sigma, ParametricAndNonparametricAgreeInLargeSamples) {
  auto e = exponential_model();
  auto s = support::draw(*e, v1(1.0), 5000, 17, 0.5);
  auto r = fit_ml(*e, s);
  EXPECT_NEAR(r.sigma_np(0, 0) / r.sigma_pm(0, 0), 1.0, 0.05);
}

TEST(Sigma, SingularIsAnError) {
  EXPECT_THROW(spd_inverse(Matrix::Zero(2, 2), "Sigma"), ModelError);
}

TEST(FitWindow, ConstantHazard) {
  auto e = exponential_model();
  auto s = sample({1, 2, 3}, {1, 1, 1});
  auto r = fit_window(*e, s, {1.5, 3.0});
  EXPECT_NEAR(r.theta_hat[0], 1.0, 1e-15);
  EXPECT_NEAR(r.sigma_pm(0, 0), (2.0 / 3.0) / 1.0, 1e-15);  // n^{-1} int Y / theta
  auto full = fit_window(*e, s, {0.0, 3.0});
  EXPECT_NEAR(full.theta_hat[0], fit_ml(*e, s).theta_hat[0], 1e-15);
}

TEST(FitWindow, WeibullMatchesGridOracle) {
  auto w = weibull_model();
  auto s = support::draw(*w, v2(1.0, 1.3), 400, 13);
  const WeightWindow win{0.3, 1.5};
  auto r = fit_window(*w, s, win);
  ASSERT_TRUE(r.converged);
  const Vector o = oracle(*w, s, r.theta_hat, win);
  EXPECT_NEAR(r.theta_hat[0], o[0], 1e-4);
  EXPECT_NEAR(r.theta_hat[1], o[1], 1e-4);
}

TEST(FitMl, CompoundPoissonRecovers) {
  auto cp = compound_poisson_frailty_model(exponential_model());
  Vector truth(3);
  truth << 1.0, 1.5, 2.0;
  auto s = support::draw(*cp, truth, 3000, 77, 0.3);  // defective: H bounded
  auto r = fit_ml(*cp, s);
  ASSERT_TRUE(r.converged) << r.message;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.theta_hat[i], truth[i], 4 * r.std_errors[i]) << i;
}
