#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nlh/hazard_models.hpp"

using namespace nlh;

namespace {

Vector v(std::initializer_list<double> x) {
  Vector out(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double a : x) out[i++] = a;
  return out;
}

double integrate_h(const HazardModel& m, const Vector& th, double t) {
  boost::math::quadrature::tanh_sinh<double> ts;
  // split at the onsets used in the catalog so the kink sits on an endpoint
  double total = 0.0;
  double a = 0.0;
  for (double knot : {0.2, 0.25, t}) {
    if (knot <= a || knot > t) continue;
    total += ts.integrate([&](double s) { return m.hazard(s, th); }, a, knot, 1e-13);
    a = knot;
  }
  return total;
}

struct Case {
  ModelPtr model;
  Vector theta;
};

std::vector<Case> catalog() {
  return {
      {exponential_model(), v({0.7})},
      {weibull_model(), v({1.3, 1.7})},
      {weibull_model(), v({0.8, 0.6})},
      {gompertz_model(), v({0.4, 0.9})},
      {gompertz_model(), v({1.1, -0.6})},
      {simple_frailty_model(0.1), v({1.5, 0.8})},
      {simple_frailty_model(0.5), v({1.5, -0.3})},
      {gamma_model(), v({2.5, 1.2})},
      {gamma_model(), v({0.6, 0.9})},
      {delayed_power_model(0.25), v({1.4, 0.6})},
      {compound_poisson_frailty_model(exponential_model()), v({1.2, 1.3, 0.7})},
      {compound_poisson_frailty_model(delayed_power_model(0.2)), v({2.0, 1.1, 1.3, 1.5})},
      {proportional_model(power_baseline()), v({1.3, 1.7})},
      {proportional_model(exponential_baseline()), v({0.4, 0.9})},
  };
}

}  // namespace

TEST(Models, SpecValues) {
  auto e = exponential_model();
  EXPECT_EQ(e->hazard(1.0, v({2})), 2.0);
  EXPECT_EQ(e->cum_hazard(3.0, v({2})), 6.0);
  EXPECT_EQ(e->score(1.0, v({2}))[0], 0.5);
  EXPECT_EQ(e->cum_score(3.0, v({5}))[0], 3.0);
  EXPECT_THROW(e->check(v({0})), ModelError);

  auto w = weibull_model();
  EXPECT_NEAR(w->hazard(2.0, v({10, 1.3})), 13.0 * std::pow(2.0, 0.3), 1e-12);
  EXPECT_NEAR(w->cum_hazard(2.0, v({10, 1.3})), 24.622888266898326, 1e-12);
  EXPECT_NEAR(integrate_h(*w, v({10, 1.3}), 2.0), 24.622888266898326, 1e-9);
  EXPECT_NEAR(w->hazard(0.7, v({3, 1})), 3.0, 1e-15);

  auto g = gompertz_model();
  EXPECT_NEAR(g->cum_hazard(1.0, v({1, 1})), std::exp(1.0) - 1.0, 1e-14);
  EXPECT_NEAR(g->cum_score(1.0, v({1, 1}))[1], 1.0, 1e-14);
  EXPECT_NEAR(g->cum_hazard(2.0, v({1.5, 0.0})), 3.0, 1e-15);
  EXPECT_NEAR(g->cum_score(2.0, v({1.5, 0.0}))[1], 1.5 * 2.0, 1e-15);

  auto f = simple_frailty_model(0.25);
  EXPECT_NEAR(f->cum_hazard(1.0, v({2, 1})), 2.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(f->cum_score(1.0, v({2, 1}))[1], 2.0 * (0.5 - std::log(2.0)), 1e-14);
  EXPECT_NEAR(f->cum_score(2.0, v({1.0, 0.0}))[1], -2.0, 1e-15);
  EXPECT_FALSE(f->admissible(v({1.0, -0.25})));
  EXPECT_TRUE(f->admissible(v({1.0, -0.2})));

  auto gm = gamma_model();
  for (double t : {0.3, 1.0, 4.0}) {
    EXPECT_NEAR(gm->cum_hazard(t, v({1.0, 1.7})), 1.7 * t, 1e-12);
    EXPECT_NEAR(gm->score(t, v({1.0, 1.7}))[1], 1.0 / 1.7, 1e-12);
    const double x = 0.8 * t;
    EXPECT_NEAR(gm->hazard(t, v({3.0, 0.8})), 0.8 * (0.5 * x * x) / (1 + x + 0.5 * x * x), 1e-12);
  }

  auto cp = compound_poisson_frailty_model(exponential_model());
  EXPECT_NEAR(cp->cum_hazard(1.0, v({1.0, 2.0, 1.0})), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(integrate_h(*cp, v({1.0, 2.0, 1.0}), 1.0), 2.0 / 3.0, 1e-10);
  for (double t : {0.5, 2.0})
    EXPECT_NEAR(cp->cum_hazard(t, v({1.0, 1.0, 0.6})), f->cum_hazard(t, v({1.0, 0.6})), 1e-12);
  EXPECT_NEAR(cp->hazard(1.3, v({1.0, 1.5, 1e-9})), 1.0, 1e-8);
}

TEST(Models, Reductions) {
  const double th = 0.83;
  auto e = exponential_model();
  for (double t : {0.1, 1.0, 3.3}) {
    const double ref = e->cum_hazard(t, v({th}));
    EXPECT_NEAR(weibull_model()->cum_hazard(t, v({th, 1.0})), ref, 1e-10);
    EXPECT_NEAR(gompertz_model()->cum_hazard(t, v({th, 0.0})), ref, 1e-10);
    EXPECT_NEAR(simple_frailty_model(0.1)->cum_hazard(t, v({th, 0.0})), ref, 1e-10);
    EXPECT_NEAR(gamma_model()->cum_hazard(t, v({1.0, th})), ref, 1e-10);
    EXPECT_NEAR(gamma_model()->hazard(t, v({1.0, th})), th, 1e-10);
  }
}

TEST(Models, CumHazardMatchesQuadrature) {
  for (auto& c : catalog())
    for (double t : {0.4, 1.0, 2.5}) {
      const double h = c.model->cum_hazard(t, c.theta);
      EXPECT_NEAR(h, integrate_h(*c.model, c.theta, t), 1e-8 * h) << c.model->id() << " t=" << t;
    }
}

TEST(Models, GradientsMatchFiniteDifferences) {
  for (auto& c : catalog()) {
    const auto& m = *c.model;
    for (double t : {0.4, 1.0, 2.5}) {
      const Vector psi = m.score(t, c.theta);
      const Vector dH = m.cum_score(t, c.theta);
      for (Eigen::Index i = 0; i < c.theta.size(); ++i) {
        const double step = 1e-5 * std::max(1.0, std::abs(c.theta[i]));
        Vector up = c.theta, dn = c.theta;
        up[i] += step;
        dn[i] -= step;
        const double fd_log_h =
            (std::log(m.hazard(t, up)) - std::log(m.hazard(t, dn))) / (2 * step);
        const double fd_H = (m.cum_hazard(t, up) - m.cum_hazard(t, dn)) / (2 * step);
        EXPECT_NEAR(psi[i], fd_log_h, 1e-5 * std::max(1.0, std::abs(fd_log_h)))
            << m.id() << " i=" << i << " t=" << t;
        EXPECT_NEAR(dH[i], fd_H, 1e-5 * std::max(1.0, std::abs(fd_H)))
            << m.id() << " i=" << i << " t=" << t;
      }
    }
  }
}

TEST(Models, GammaShapeScoreAgainstFiniteDifference) {
  auto gm = gamma_model();
  for (double t : {0.2, 1.0, 3.0, 8.0}) {
    const Vector th = v({2.0, 1.0});
    const double step = 1e-6;
    const double fd =
        (std::log(gm->hazard(t, v({2.0 + step, 1.0}))) - std::log(gm->hazard(t, v({2.0 - step, 1.0})))) /
        (2 * step);
    EXPECT_NEAR(gm->score(t, th)[0], fd, 1e-4);
  }
}

TEST(Models, ClosedFormInfoMatchesQuadrature) {
  for (auto& c : catalog()) {
    if (!c.model->closed_form_info()) continue;
    for (double t : {0.5, 2.0}) {
      const Matrix closed = c.model->info_integral(t, c.theta);
      const Matrix quad = c.model->HazardModel::info_integral(t, c.theta);
      EXPECT_LT((closed - quad).cwiseAbs().maxCoeff(), 1e-8 * closed.cwiseAbs().maxCoeff())
          << c.model->id();
    }
  }
}

TEST(Models, InverseCumHazard) {
  for (auto& c : catalog())
    for (double y : {0.05, 0.7, 2.0}) {
      const double t = c.model->inverse_cum_hazard(y, c.theta);
      if (!std::isfinite(t)) continue;  // defective
      EXPECT_NEAR(c.model->cum_hazard(t, c.theta), y, 1e-9 * y) << c.model->id();
    }
  EXPECT_NEAR(weibull_model()->inverse_cum_hazard(std::log(2.0), v({10, 1.3})),
              std::pow(std::log(2.0) / 10.0, 1.0 / 1.3), 1e-14);
}

TEST(Models, Transforms) {
  for (auto& c : catalog()) {
    const Vector eta = c.model->to_free(c.theta);
    EXPECT_LT((c.model->from_free(eta) - c.theta).norm(), 1e-12);
  }
}

TEST(Models, Fixed) {
  auto one = fixed_model([](double) { return 1.0; }, [](double t) { return t; });
  EXPECT_EQ(one->dim(), 0u);
  EXPECT_EQ(one->cum_hazard(2.5, Vector(0)), 2.5);
  EXPECT_EQ(one->score(1.0, Vector(0)).size(), 0);

  auto tab = fixed_model_from_table({1, 2, 4}, {1, 1.5, 3.5});
  EXPECT_NEAR(tab->cum_hazard(0.5, Vector(0)), 0.5, 1e-15);
  EXPECT_NEAR(tab->cum_hazard(1.5, Vector(0)), 1.25, 1e-15);
  EXPECT_NEAR(tab->cum_hazard(3.0, Vector(0)), 2.5, 1e-15);
  EXPECT_NEAR(tab->hazard(3.0, Vector(0)), 1.0, 1e-15);
  EXPECT_THROW(fixed_model_from_table({1, 2}, {1, 0.5}), ModelError);
}

TEST(Models, ProportionalFirstScore) {
  for (auto& c : catalog())
    if (c.model->proportional()) EXPECT_NEAR(c.model->score(1.3, c.theta)[0], 1.0 / c.theta[0], 1e-15);
}

TEST(Models, MakeModel) {
  EXPECT_EQ(make_model("weibull", 3.0)->dim(), 2u);
  EXPECT_EQ(make_model("cpfrailty", 3.0)->dim(), 3u);
  EXPECT_FALSE(make_model("frailty", 2.0)->admissible(v({1.0, -0.26})));
  EXPECT_THROW(make_model("lognormal", 1.0), ModelError);
}
