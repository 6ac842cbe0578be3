#pragma once

#include <functional>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlh {

// Raised for inputs that violate a documented precondition.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Subject {
  double exit_time = 0.0;
  int status = 0;  // 1 = event, 0 = censored
  double entry_time = 0.0;
  std::vector<double> covariates;
};

// Immutable collection of subjects observed on (0, tau].
class SurvivalSample {
 public:
  explicit SurvivalSample(std::vector<Subject> subjects, double tau = -1.0);

  // Convenience constructor for the common right-censored case.
  static SurvivalSample from_times(std::span<const double> times, std::span<const int> status,
                                   std::span<const double> entry = {});

  const std::vector<Subject>& subjects() const { return subjects_; }
  const Subject& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t n() const { return subjects_.size(); }
  double tau() const { return tau_; }
  std::size_t covariate_dim() const { return covariate_dim_; }
  bool has_delayed_entry() const { return has_entry_; }
  std::size_t event_count() const;
  double max_exit_time() const;

 private:
  std::vector<Subject> subjects_;
  double tau_ = 0.0;
  std::size_t covariate_dim_ = 0;
  bool has_entry_ = false;
};

// Counting-process summary of a sample.
//
// Gaps (knots[g], knots[g+1]] partition (0, knots.back()] and carry the
// constant left-continuous at-risk count Y on that gap.  Every event time is
// a knot, so integrals of functions of (s, Y(s)) reduce to sums over gaps.
struct RiskPath {
  std::vector<double> event_times;  // u_1 < ... < u_m
  std::vector<int> at_risk;         // Y(u_i)
  std::vector<int> events;          // dN(u_i)
  std::vector<double> knots;        // 0 = c_0 < c_1 < ... < c_G
  std::vector<int> gap_risk;        // Y on (c_g, c_{g+1}], size G
  std::vector<std::size_t> event_gap;  // gap index whose right end is u_i
  std::size_t n = 0;
  double tau = 0.0;

  std::size_t gap_count() const { return gap_risk.size(); }
  int total_events() const;
  // Y(t), left-continuous; 0 beyond the last knot.
  int risk_at(double t) const;
};

RiskPath build_risk_path(const SurvivalSample& sample);

// Right-continuous step function; zero before the first knot.
class StepCurve {
 public:
  StepCurve() = default;
  StepCurve(std::vector<double> knots, std::vector<double> values);

  double operator()(double t) const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

struct NelsonAalen {
  StepCurve cumulative_hazard;
  // Running sum of dN/Y^2, the usual variance accumulator.
  StepCurve variance;
};

NelsonAalen nelson_aalen(const RiskPath& path);

// Exact integral of g over (a, b] given that Y is constant there.
using GapIntegral = std::function<double(double a, double b, int at_risk)>;

// \int_0^t g(s, Y(s)) ds as a sum over gaps, with a partial last gap.
double step_integral(const RiskPath& path, const GapIntegral& integral, double t);

// Quartic kernel (15/8)(1 - 8z^2 + 16z^4) on [-1/2, 1/2].
double quartic_kernel(double z);
double quartic_kernel_derivative(double z);

// Kernel-smoothed hazard from the jumps of H, reflected about zero.
std::vector<double> kernel_smooth_hazard(const StepCurve& cumulative_hazard, double bandwidth,
                                         std::span<const double> grid);

struct DiscreteTable {
  std::vector<double> left;
  std::vector<double> right;
  std::vector<long> at_risk;
  std::vector<long> events;

  std::size_t size() const { return left.size(); }
  void validate() const;
};

DiscreteTable group_to_discrete(const SurvivalSample& sample, std::span<const double> cut_points);

// CSV readers.  Header required; errors carry the 1-based line number.
SurvivalSample read_sample_csv(std::istream& in);
SurvivalSample read_sample_csv_file(const std::string& path);
DiscreteTable read_discrete_csv(std::istream& in);
DiscreteTable read_discrete_csv_file(const std::string& path);

}  // namespace nlh
