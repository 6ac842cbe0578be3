#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nlh/survival_data.hpp"

using namespace nlh;

namespace {

SurvivalSample sample(std::vector<double> t, std::vector<int> d, std::vector<double> v = {}) {
  return SurvivalSample::from_times(t, d, v);
}

}  // namespace

TEST(RiskPath, AllEvents) {
  auto p = build_risk_path(sample({1, 2, 3}, {1, 1, 1}));
  EXPECT_EQ(p.event_times, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(p.at_risk, (std::vector<int>{3, 2, 1}));
  EXPECT_EQ(p.events, (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(p.n, 3u);
}

TEST(RiskPath, CensoredDrops) {
  auto p = build_risk_path(sample({1, 2, 3}, {1, 0, 1}));
  EXPECT_EQ(p.event_times, (std::vector<double>{1, 3}));
  EXPECT_EQ(p.at_risk, (std::vector<int>{3, 1}));
  EXPECT_EQ(p.events, (std::vector<int>{1, 1}));
}

TEST(RiskPath, DelayedEntry) {
  auto p = build_risk_path(sample({2, 3}, {1, 1}, {0, 2.5}));
  EXPECT_EQ(p.at_risk, (std::vector<int>{1, 1}));
  EXPECT_EQ(p.risk_at(2.5), 0);
  EXPECT_EQ(p.risk_at(2.6), 1);
}

TEST(RiskPath, TiesMerge) {
  auto p = build_risk_path(sample({1, 1, 2}, {1, 1, 1}));
  EXPECT_EQ(p.events, (std::vector<int>{2, 1}));
  EXPECT_EQ(p.at_risk, (std::vector<int>{3, 1}));
}

TEST(RiskPath, NoEvents) {
  EXPECT_THROW(build_risk_path(sample({1, 2}, {0, 0})), DataError);
}

TEST(RiskPath, InvalidSubjects) {
  EXPECT_THROW(sample({1, 2}, {1, 2}), DataError);
  EXPECT_THROW(sample({1}, {1}, {1.5}), DataError);
}

TEST(NelsonAalen, Values) {
  auto na = nelson_aalen(build_risk_path(sample({1, 2, 3}, {1, 1, 1})));
  EXPECT_NEAR(na.cumulative_hazard(3), 11.0 / 6.0, 1e-15);
  EXPECT_NEAR(na.variance(3), 1.0 / 9 + 1.0 / 4 + 1.0, 1e-15);

  auto na2 = nelson_aalen(build_risk_path(sample({1, 2, 3}, {1, 0, 1})));
  EXPECT_NEAR(na2.cumulative_hazard(100), 4.0 / 3.0, 1e-15);

  std::vector<double> t(10, 6.0);
  t[0] = 5.0;
  std::vector<int> d(10, 0);
  d[0] = 1;
  auto na3 = nelson_aalen(build_risk_path(sample(t, d)));
  EXPECT_EQ(na3.cumulative_hazard(4.9), 0.0);
  EXPECT_NEAR(na3.cumulative_hazard(5.0), 0.1, 1e-15);
}

TEST(StepIntegral, Examples) {
  auto p = build_risk_path(sample({1, 2, 3}, {1, 1, 1}));
  EXPECT_NEAR(step_integral(p, [](double a, double b, int) { return b - a; }, 2.5), 2.5, 1e-15);

  auto q = build_risk_path(sample({1, 2}, {1, 1}));
  auto n_over_y = [&](double a, double b, int y) { return y > 0 ? 2.0 / y * (b - a) : 0.0; };
  EXPECT_NEAR(step_integral(q, n_over_y, 2.0), 3.0, 1e-15);

  auto r = build_risk_path(sample({1}, {1}));
  auto expo = [](double a, double b, int) { return std::exp(b) - std::exp(a); };
  EXPECT_NEAR(step_integral(r, expo, 1.0), std::exp(1.0) - 1.0, 1e-14);

  EXPECT_THROW(step_integral(p, expo, -1.0), DataError);
}

TEST(StepIntegral, MatchesQuadratureOnRandomPaths) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution coin(0.7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> t;
    std::vector<int> d;
    for (int i = 0; i < 15; ++i) {
      t.push_back(ex(rng));
      d.push_back(coin(rng) ? 1 : 0);
    }
    d[0] = 1;
    auto p = build_risk_path(sample(t, d));
    // g(s, Y) = Y * s^2
    auto exact = [](double a, double b, int y) { return y * (b * b * b - a * a * a) / 3.0; };
    const double horizon = p.knots.back();
    const double direct = step_integral(p, exact, horizon);
    double oracle = 0.0;
    for (std::size_t g = 0; g < p.gap_count(); ++g) {
      const int y = p.gap_risk[g];
      oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [y](double s) { return y * s * s; }, p.knots[g], p.knots[g + 1], 15, 1e-14);
    }
    EXPECT_NEAR(direct, oracle, 1e-10 * std::abs(oracle));
  }
}

TEST(Kernel, Facts) {
  const double area = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      quartic_kernel, -0.5, 0.5, 5, 1e-15);
  EXPECT_NEAR(area, 1.0, 1e-15);
  EXPECT_EQ(quartic_kernel(0.5), 0.0);
  EXPECT_EQ(quartic_kernel(-0.5), 0.0);
  EXPECT_EQ(quartic_kernel_derivative(0.5), 0.0);
  EXPECT_EQ(quartic_kernel(0.7), 0.0);
  EXPECT_NEAR(quartic_kernel(0.0), 15.0 / 8.0, 1e-15);
}

TEST(Kernel, SingleJump) {
  StepCurve h({1.0}, {0.1});
  const std::vector<double> grid{1.0};
  auto v = kernel_smooth_hazard(h, 4.0, grid);
  EXPECT_NEAR(v[0], 0.1 * 0.25 * 15.0 / 8.0, 1e-15);
  EXPECT_THROW(kernel_smooth_hazard(h, 0.0, grid), DataError);
}

TEST(Kernel, ReflectionFlattensSlopeAtZero) {
  StepCurve h({0.05, 0.2, 0.3, 0.6}, {0.1, 0.3, 0.35, 0.6});
  const double eps = 1e-7;
  const std::vector<double> grid{0.0, eps, 2 * eps};
  auto v = kernel_smooth_hazard(h, 0.8, grid);
  EXPECT_LT(std::abs(v[1] - v[0]) / eps, 1e-6);
  // second-order one-sided difference, free of the curvature term
  EXPECT_LT(std::abs(-3 * v[0] + 4 * v[1] - v[2]) / (2 * eps), 1e-6);
  EXPECT_GT(v[0], 0.0);
}

TEST(GroupToDiscrete, Examples) {
  const std::vector<double> cuts{0, 1, 2};
  auto tab = group_to_discrete(sample({0.5, 1.5, 1.6}, {1, 1, 1}), cuts);
  EXPECT_EQ(tab.at_risk, (std::vector<long>{3, 2}));
  EXPECT_EQ(tab.events, (std::vector<long>{1, 2}));

  auto cens = group_to_discrete(sample({0.5, 1.5, 0.2}, {0, 1, 0}), cuts);
  EXPECT_EQ(cens.events[0], 0);

  const std::vector<double> one{0, 1};
  auto single = group_to_discrete(sample({0.5}, {1}), one);
  EXPECT_EQ(single.at_risk, (std::vector<long>{1}));
  EXPECT_EQ(single.events, (std::vector<long>{1}));

  EXPECT_THROW(group_to_discrete(sample({2.5}, {1}), cuts), DataError);
}

TEST(GroupToDiscrete, ConservesEvents) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> t;
  std::vector<int> d;
  for (int i = 0; i < 200; ++i) {
    t.push_back(std::min(ex(rng), 4.9));
    d.push_back(i % 3 ? 1 : 0);
  }
  std::vector<double> cuts;
  for (int i = 0; i <= 10; ++i) cuts.push_back(0.5 * i);
  auto tab = group_to_discrete(sample(t, d), cuts);
  long total = 0;
  for (long e : tab.events) total += e;
  long expected = 0;
  for (int x : d) expected += x;
  EXPECT_EQ(total, expected);
}

TEST(Csv, SampleAndErrors) {
  std::istringstream ok("time,status,entry,z1\n1,1,0,0.5\n2,0,0.5,1\n");
  auto s = read_sample_csv(ok);
  EXPECT_EQ(s.n(), 2u);
  EXPECT_EQ(s.covariate_dim(), 1u);
  EXPECT_TRUE(s.has_delayed_entry());

  std::istringstream bad("time,status\n1,1\n2,x\n");
  try {
    read_sample_csv(bad);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }

  std::istringstream disc("left,right,at_risk,events\n0,1,10,2\n1,2,8,3\n");
  auto tab = read_discrete_csv(disc);
  EXPECT_EQ(tab.size(), 2u);
  EXPECT_EQ(tab.events[1], 3);
}
