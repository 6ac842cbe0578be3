#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nlh/nlh_engine.hpp"

namespace nlh {

// Lifetime distribution: model hazard times a per-subject gamma frailty (mean 1).
struct DistSpec {
  ModelPtr model;
  Vector theta;
  double frailty_variance = 0.0;
};

struct CensoringSpec {
  enum class Kind { None, Exponential, Uniform, Administrative };
  Kind kind = Kind::None;
  double value = 0.0;  // rate, upper end, or cut-off time

  static CensoringSpec none() { return {}; }
  static CensoringSpec exponential(double rate) { return {Kind::Exponential, rate}; }
  static CensoringSpec uniform(double upper) { return {Kind::Uniform, upper}; }
  static CensoringSpec administrative(double tau) { return {Kind::Administrative, tau}; }
};

// Entry V ~ Uniform(0, max_entry); subjects with T <= V are never seen and redrawn.
struct TruncationSpec {
  double max_entry = 0.0;
};

// Subject i uses the stream seeded by split_seed(seed, i) in the order
// lifetime, frailty, censoring, entry.
SurvivalSample simulate_sample(const DistSpec& dist, const CensoringSpec& censoring,
                               const TruncationSpec& truncation, std::size_t n, std::uint64_t seed);

// splitmix64 of master ^ (index * golden ratio); documented replication seed rule.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

using Fn = std::function<double(double)>;

struct FixedHazard {
  Fn h;
  Fn cum_h;
};
struct LocalAlternative {
  Fn phi;
  double delta = 0.0;
};
struct FrailtyContamination {
  double sigma2 = 0.0;
  double theta = 1.0;
};
using AlternativeSpec = std::variant<FixedHazard, LocalAlternative, FrailtyContamination>;

// Limit exposure y(s) on (0, tau]; tau may be infinite.
struct Exposure {
  Fn y;
  double tau = 0.0;
  std::vector<double> knots;  // jumps of y, for piecewise quadrature
  // Y(s)/n step function of one sample.
  static Exposure from_sample(const SurvivalSample& sample);
  // exp(-H(s, theta)), the uncensored survivor function, on the half line.
  static Exposure survivor(const HazardModel& model, const Vector& theta);
};

// Maximiser of \int y {h log h(., theta) - h(., theta)}; exposure-weighted mean for the constant model.
Vector least_false_theta(const HazardModel& model, const Fn& true_hazard, const Exposure& exposure);

// pi(t) = \int_0^t k {h - h(., theta0)}.
std::vector<double> drift_curve(const HazardModel& model, const Vector& theta0, const Fn& true_hazard,
                                const Fn& k, std::span<const double> times);

struct LocalShift {
  std::vector<double> times;
  std::vector<double> a;
  std::vector<double> kappa;
  std::vector<double> mean;  // delta a / kappa
};

// a(t) and kappa(t) for weight k under h_n = h(., theta){1 + phi delta / sqrt n}.
LocalShift local_mean_shift(const HazardModel& model, const Vector& theta, const Fn& phi, double delta,
                            const Fn& k, const Exposure& exposure, std::span<const double> times);

// sqrt(n) sigma^2 theta t exp(-theta t / 2) / sqrt(1 - exp(-theta t)); uncensored, full half line.
double frailty_power_prediction(double theta, double sigma2, double n, double t);

struct PowerPrediction {
  std::vector<double> times;
  Vector theta0;               // fixed alternative
  std::vector<double> drift;   // fixed alternative
  std::vector<double> mean;    // predicted mean of NLH(t)
  std::string note;
};

// Type A uses k = 1, Type B k = y.
PowerPrediction predict_power(const AlternativeSpec& alternative, const HazardModel& model,
                              const Vector& theta, PlotType type, const Exposure& exposure, double n,
                              std::span<const double> times);

enum class ExecutionPolicy { Serial, OpenMP };

struct Probe {
  enum class Kind { Time, MedianEvent, EventIndex };
  Kind kind = Kind::MedianEvent;
  double value = 0.0;  // time, or 1-based event index

  static Probe time(double t) { return {Kind::Time, t}; }
  static Probe median_event() { return {Kind::MedianEvent, 0.0}; }
  static Probe event(int k) { return {Kind::EventIndex, static_cast<double>(k)}; }
};

struct Scenario {
  DistSpec truth;
  CensoringSpec censoring;
  TruncationSpec truncation;
  std::size_t n = 100;
  std::string model = "exponential";  // make_model identifier
  std::vector<PlotType> types{PlotType::A, PlotType::B};
  std::vector<VarianceFlavor> flavors{VarianceFlavor::Parametric};
  std::vector<Probe> probes{Probe::median_event()};
  double level = 1.96;
  double b1 = 0.1;
  double b2 = 0.9;
  std::vector<double> band_thresholds{1.96, 3.05};
  std::vector<double> grid;  // times for the mean curve
};

struct SeriesSummary {
  PlotType type = PlotType::A;
  VarianceFlavor flavor = VarianceFlavor::Parametric;
  std::vector<double> probe_exceedance;  // Pr{|NLH| > level}
  std::vector<double> probe_mean;
  std::vector<double> probe_se;
  std::vector<std::size_t> probe_count;  // replications with a defined value
  std::vector<double> band_exceedance;   // per threshold
  std::size_t band_count = 0;
  std::vector<double> grid_mean;  // NLH
  std::vector<double> grid_se;
  std::vector<double> grid_drift;  // mean D_n / sqrt(n)
  std::vector<std::size_t> grid_count;
};

struct McSummary {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::uint64_t seed = 0;
  std::vector<SeriesSummary> series;

  const SeriesSummary& get(PlotType type, VarianceFlavor flavor) const;
};

McSummary mc_study(const Scenario& scenario, std::size_t reps, std::uint64_t seed,
                   ExecutionPolicy policy = ExecutionPolicy::OpenMP);

}  // namespace nlh
