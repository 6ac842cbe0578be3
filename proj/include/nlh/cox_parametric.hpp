#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlh/ml_fitting.hpp"
#include "nlh/nlh_engine.hpp"

namespace nlh {

// h_j(s) = theta exp(beta' z_j), time-fixed covariates.
struct CoxFit {
  double theta_hat = 0.0;
  Vector beta_hat;
  Matrix sigma;  // (theta, beta) coordinates
  Matrix cov;    // sigma^{-1} / n over the free coordinates
  Vector std_errors;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool beta_fixed = false;
  double grad_norm = 0.0;
  std::string message;

  Vector params() const;
};

struct CoxOptions {
  std::optional<Vector> fixed_beta;  // only theta is estimated when set
  double tolerance = 1e-10;
  int max_iterations = 100;
};

// R, R1 and E = R1 / R, constant on each gap of the risk path.
class RiskAverages {
 public:
  RiskAverages(const SurvivalSample& sample, const Vector& beta);

  double r(double s) const;
  Vector r1(double s) const;
  Vector e(double s) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& gap_r() const { return r_; }
  const std::vector<Vector>& gap_r1() const { return r1_; }

 private:
  std::size_t gap_of(double s) const;
  std::vector<double> knots_;
  std::vector<double> r_;
  std::vector<Vector> r1_;
  std::size_t dim_ = 0;
};

double cox_log_likelihood(const SurvivalSample& sample, double theta, const Vector& beta);

CoxFit fit_cox_exponential(const SurvivalSample& sample, const CoxOptions& options = {});

NlhCurve cox_curve_type_a(const CoxFit& fit, const SurvivalSample& sample);
NlhCurve cox_curve_type_b(const CoxFit& fit, const SurvivalSample& sample);

}  // namespace nlh
