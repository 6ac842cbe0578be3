#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlh/hazard_models.hpp"
#include "nlh/survival_data.hpp"

namespace nlh {

enum class VarianceFlavor { Parametric, Nonparametric };

// Indicator weight on (a, b].
struct WeightWindow {
  double a = 0.0;
  double b = 0.0;
};

struct FitOptions {
  std::optional<Vector> init;
  // Parameters held at their init value.
  std::vector<bool> fixed;
  double tolerance = 1e-8;
  int max_iterations = 100;
  // Sigma_pm is always computed for closed-form families; quadrature families only on request.
  bool parametric_sigma = false;
};

struct FitResult {
  std::string model_id;
  Vector theta_hat;
  double loglik = 0.0;
  Matrix sigma_pm;  // empty when not computed
  Matrix sigma_np;
  Matrix cov;  // Sigma^{-1}/n over free parameters, zero rows for fixed ones
  VarianceFlavor cov_flavor = VarianceFlavor::Parametric;
  Vector std_errors;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  std::vector<bool> fixed;
  std::optional<WeightWindow> window;
  std::string message;

  std::vector<Eigen::Index> free_indices() const;
  const Matrix& sigma(VarianceFlavor flavor) const;
};

VarianceFlavor default_flavor(const HazardModel& model);

double log_likelihood(const HazardModel& model, const Vector& theta, const SurvivalSample& sample,
                      std::optional<WeightWindow> window = std::nullopt);
// Gradient of the log-likelihood in theta.
Vector likelihood_score(const HazardModel& model, const Vector& theta,
                        const SurvivalSample& sample,
                        std::optional<WeightWindow> window = std::nullopt);

FitResult fit_ml(const HazardModel& model, const SurvivalSample& sample,
                 const FitOptions& options = {});
// theta * h0(s, beta) with scalar beta: one-dimensional search over the profile.
FitResult fit_profile(const HazardModel& model, const SurvivalSample& sample,
                      const FitOptions& options = {});
// Likelihood restricted to (a, b]; sigma_pm holds J_w and sigma_np its empirical version.
FitResult fit_window(const HazardModel& model, const SurvivalSample& sample, WeightWindow window,
                     const FitOptions& options = {});

// n^{-1} sum_j \int_{v_j}^{t_j} psi psi' h ds, clipped to the window when given.
Matrix sigma_parametric(const HazardModel& model, const Vector& theta, const SurvivalSample& sample,
                        std::optional<WeightWindow> window = std::nullopt);
// n^{-1} sum_j delta_j psi(t_j) psi(t_j)'.
Matrix sigma_nonparametric(const HazardModel& model, const Vector& theta,
                           const SurvivalSample& sample,
                           std::optional<WeightWindow> window = std::nullopt);

// \int_a^b psi psi' h ds; closed form difference when available.
Matrix info_between(const HazardModel& model, const Vector& theta, double a, double b);

// Inverse of a symmetric positive definite matrix; ModelError when singular.
Matrix spd_inverse(const Matrix& m, const std::string& what);

}  // namespace nlh
