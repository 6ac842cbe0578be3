#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlh/nlh_engine.hpp"

namespace nlh {

// Time-discrete hazard h_i(theta) on the cells of a DiscreteTable.
class DiscreteModel {
 public:
  virtual ~DiscreteModel() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  std::size_t dim() const { return param_names().size(); }

  virtual double hazard(double left, double right, const Vector& theta) const = 0;
  // d h_i / d theta
  virtual Vector hazard_gradient(double left, double right, const Vector& theta) const = 0;

  virtual bool admissible(const Vector& theta) const = 0;
  virtual Vector to_free(const Vector& theta) const = 0;
  virtual Vector from_free(const Vector& eta) const = 0;
  virtual Vector start(const DiscreteTable& table) const = 0;
};

using DiscreteModelPtr = std::shared_ptr<const DiscreteModel>;

// h_i = theta in (0, 1).
DiscreteModelPtr constant_discrete_model();
// h_i = 1 - exp{-(H(r_i) - H(l_i))}.
DiscreteModelPtr grouped_model(ModelPtr continuous);

struct DiscreteFitOptions {
  std::optional<Vector> init;
  std::vector<bool> fixed;
  // Sample size behind r_i = Y_i / n; max Y_i when unset.
  std::optional<double> n;
  double tolerance = 1e-9;
  int max_iterations = 200;
};

struct DiscreteFit {
  std::string model_id;
  Vector theta_hat;
  Matrix sigma;
  Matrix cov;  // free block inverse over n, zero for fixed entries
  Vector std_errors;
  double loglik = 0.0;
  double n = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  std::vector<bool> fixed;
  std::string message;

  std::vector<Eigen::Index> free_indices() const;
};

double discrete_log_likelihood(const DiscreteModel& model, const Vector& theta,
                               const DiscreteTable& table);
Vector discrete_score(const DiscreteModel& model, const Vector& theta, const DiscreteTable& table);

DiscreteFit fit_discrete(const DiscreteModel& model, const DiscreteTable& table,
                         const DiscreteFitOptions& options = {});

// sum r_i h*_i h*_i' / {h_i (1 - h_i)}, r_i = Y_i / n.
Matrix sigma_discrete(const DiscreteModel& model, const Vector& theta, const DiscreteTable& table,
                      double n);

// K_i = 1 for A, Y_i / n for B; points at the right cell ends.
NlhCurve discrete_curve(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table,
                        PlotType type);
// Arbitrary weights K_i.
NlhCurve discrete_curve(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table,
                        const std::vector<double>& weights);

struct DeltaPlot {
  std::vector<double> midpoints;
  std::vector<double> residual;  // NaN where undefined
  std::vector<double> w2;
  std::vector<bool> defined;
};

DeltaPlot delta_plot(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table);

}  // namespace nlh
