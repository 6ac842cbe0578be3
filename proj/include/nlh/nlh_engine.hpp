#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlh/hazard_models.hpp"
#include "nlh/ml_fitting.hpp"
#include "nlh/survival_data.hpp"

namespace nlh {

enum class PlotType { A, B, C };

std::string to_string(PlotType t);
std::string to_string(VarianceFlavor f);

// Weight G_n(s) of a Type C plot, K_n = (Y/n) G_n.
struct GWeight {
  enum class Kind { Unit, Deterministic, LogMinusPhiHat, OneMinusThetaS, OptimalAgainst };
  Kind kind = Kind::Unit;
  std::function<double(double)> g;    // Deterministic
  std::function<double(double)> phi;  // OptimalAgainst: extension score at theta-hat
  std::string label = "unit";

  static GWeight unit() { return {}; }
  static GWeight deterministic(std::function<double(double)> g, std::string label = "custom");
  // log s - phi-hat, phi-hat = sum(t log t - t) / sum t
  static GWeight log_minus_phi_hat();
  // 1 - theta-hat s
  static GWeight one_minus_theta_s();
  // phi - psi' Sigma_pm^{-1} \int (Y/n) phi psi h
  static GWeight optimal_against(std::function<double(double)> phi, std::string label = "optimal");
};

double phi_hat(const SurvivalSample& sample);

struct NlhCurve {
  std::vector<double> times;
  std::vector<double> d_n;
  std::vector<double> kappa;
  std::vector<double> kappa2;  // before flooring
  std::vector<double> nlh;     // NaN where undefined
  std::vector<bool> defined;
  // NLH just before the jump at times[i] (NaN where undefined); empty for discrete curves
  std::vector<double> nlh_left;
  // a few points inside each gap (Types A and B only), used for suprema
  std::vector<double> fine_times;
  std::vector<double> fine_nlh;

  std::string model_id;
  Vector theta;
  PlotType type = PlotType::A;
  VarianceFlavor flavor = VarianceFlavor::Parametric;
  std::optional<WeightWindow> window;
  std::string weight;
  double band_level = 1.96;

  std::size_t size() const { return times.size(); }
  // Linear interpolation between defined points; NaN outside.
  double at(double t) const;
};

NlhCurve curve_type_a(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      std::optional<VarianceFlavor> flavor = std::nullopt);
NlhCurve curve_type_b(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      std::optional<VarianceFlavor> flavor = std::nullopt);
NlhCurve curve_type_c(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      const GWeight& weight,
                      std::optional<VarianceFlavor> flavor = std::nullopt);
// Dispatch on type; the weight only matters for C.
NlhCurve nlh_curve(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                   PlotType type, std::optional<VarianceFlavor> flavor = std::nullopt,
                   const GWeight& weight = {});

// Fully specified hazard (p = 0): no estimation correction.
NlhCurve curve_fixed(const HazardModel& model, const SurvivalSample& sample, PlotType type,
                     const GWeight& weight = {});

// Curve on the window of a fit_window result, integrals started at a.
NlhCurve curve_windowed(const HazardModel& model, const FitResult& window_fit,
                        const SurvivalSample& sample, PlotType type,
                        std::optional<VarianceFlavor> flavor = std::nullopt,
                        const GWeight& weight = {});

struct BandCalibration {
  double b1 = 0.1;
  double b2 = 0.9;
  double threshold = 1.96;
  double probability = 0.0;
  bool reliable = true;  // false for threshold <= 1
};

// Pr{max |normalised bridge| >= m} over exposure fractions [b1, b2].
BandCalibration max_band_exceedance(double b1, double b2, double m);
inline double max_band_exceedance_prob(double b1, double b2, double m) {
  return max_band_exceedance(b1, b2, m).probability;
}

// Pr{|sqrt(k)(1 - V)/sqrt(V)| > c} with V = chi^2_{2k} / 2k.
double early_exceedance_prob(int k, double threshold);

// Times where the exposure fraction \int_0^t Y / \int_0^tau Y reaches b1 and b2.
std::pair<double, double> empirical_band_positions(const RiskPath& path, double b1, double b2);

// sup |NLH| over [a1, a2] from the points and their left limits; NaN when none.
double band_maximum(const NlhCurve& curve, double a1, double a2);

}  // namespace nlh
