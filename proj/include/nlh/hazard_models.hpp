#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class SurvivalSample;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// How a constrained parameter maps to the unconstrained scale used by the optimizers.
struct ParamTransform {
  enum class Kind { Identity, Log, ShiftedLog };
  Kind kind = Kind::Log;
  double lower = 0.0;  // ShiftedLog: parameter > lower

  double to_free(double value) const;
  double from_free(double eta) const;
  double derivative(double eta) const;  // d value / d eta
  bool admits(double value) const;
};

// Parametric hazard family h(s, theta).
//
// score() is the gradient of log h in theta and cum_score() the gradient of
// H(t, theta); info_integral(t) is \int_0^t score score' h ds.
class HazardModel {
 public:
  virtual ~HazardModel() = default;

  virtual std::string id() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  std::size_t dim() const { return transforms().size(); }
  virtual std::vector<ParamTransform> transforms() const = 0;

  virtual double hazard(double s, const Vector& theta) const = 0;
  virtual double cum_hazard(double t, const Vector& theta) const = 0;
  virtual Vector score(double s, const Vector& theta) const = 0;
  virtual Vector cum_score(double t, const Vector& theta) const = 0;

  // Quadrature by default; closed forms where the family allows.
  virtual Matrix info_integral(double t, const Vector& theta) const;
  virtual bool closed_form_info() const { return false; }

  // Sorted points where h or its score is not smooth; quadrature splits there.
  virtual std::vector<double> breakpoints() const { return {}; }

  // True when h = theta_0 * h0(s, theta_1..), so the first score entry is 1/theta_0.
  virtual bool proportional() const { return false; }

  // Smallest t with H(t) = target; +inf for defective distributions.
  virtual double inverse_cum_hazard(double target, const Vector& theta) const;

  bool admissible(const Vector& theta) const;
  void check(const Vector& theta) const;
  Vector to_free(const Vector& theta) const;
  Vector from_free(const Vector& eta) const;
  Vector free_jacobian(const Vector& eta) const;  // diagonal d theta / d eta

 protected:
  virtual bool extra_admissible(const Vector&) const { return true; }
};

using ModelPtr = std::shared_ptr<const HazardModel>;

ModelPtr exponential_model();
ModelPtr weibull_model();
ModelPtr gompertz_model();
// h = theta / (1 + beta s) with beta > -epsilon.
ModelPtr simple_frailty_model(double epsilon);
// epsilon = 1 / (2 max exit time).
ModelPtr simple_frailty_model(const SurvivalSample& sample);
// Parameters (alpha, theta): shape and rate.
ModelPtr gamma_model();

// lambda(t) = a (t - onset)^k for t >= onset, zero before; parameters (a, k).
ModelPtr delayed_power_model(double onset);

// Compound Poisson frailty over a base hazard; parameters (base..., alpha, delta).
ModelPtr compound_poisson_frailty_model(ModelPtr base);

// Fully specified hazard, p = 0.
ModelPtr fixed_model(std::function<double(double)> h0, std::function<double(double)> cum_h0,
                     std::string label = "fixed");
// Tabulated (t, H0(t)) pairs, linear in H0 between points; (0, 0) is implied.
ModelPtr fixed_model_from_table(std::vector<double> times, std::vector<double> cum_hazard,
                                std::string label = "fixed");

// Baseline h0(s, beta) for the proportional class theta * h0(s, beta).
class BaselineFamily {
 public:
  virtual ~BaselineFamily() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual std::vector<ParamTransform> transforms() const = 0;
  virtual double h0(double s, const Vector& beta) const = 0;
  virtual double cum_h0(double t, const Vector& beta) const = 0;
  virtual Vector score0(double s, const Vector& beta) const = 0;
  virtual Vector cum_score0(double t, const Vector& beta) const = 0;
};

using BaselinePtr = std::shared_ptr<const BaselineFamily>;

// h0 = beta s^{beta-1}
BaselinePtr power_baseline();
// h0 = exp(beta s)
BaselinePtr exponential_baseline();
// h0 given, no free parameter
BaselinePtr fixed_baseline(std::function<double(double)> h0, std::function<double(double)> cum_h0);

ModelPtr proportional_model(BaselinePtr baseline);

// CLI identifiers: exponential | weibull | gompertz | frailty | gamma | cpfrailty |
// fixed:<file>.  The sample supplies the frailty offset.
ModelPtr make_model(const std::string& id, const SurvivalSample& sample);
ModelPtr make_model(const std::string& id, double max_exit_time);

}  // namespace nlh
