#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlh/nlh_engine.hpp"
#include "nlh/power_lab.hpp"

namespace nlh {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kSoftwareVersion = "0.3.0";

struct CurveTable {
  std::string label;
  std::string type;    // "A", "B", "C"
  std::string flavor;  // "parametric" / "nonparametric"
  std::string weight;
  std::vector<double> times;
  std::vector<double> d_n;
  std::vector<double> kappa;
  std::vector<double> nlh;  // NaN where undefined
};

// Fit metadata plus one table per curve.
struct CurveDocument {
  int schema_version = kSchemaVersion;
  std::string software_version = kSoftwareVersion;
  std::string model;
  std::vector<std::string> param_names;
  std::vector<double> theta;
  std::vector<double> std_errors;
  std::string flavor;
  std::optional<WeightWindow> window;
  double band_level = 1.96;
  std::vector<CurveTable> curves;
};

CurveTable curve_table(const NlhCurve& curve, std::string label = {});
CurveDocument make_document(const HazardModel& model, const FitResult& fit,
                            const std::vector<NlhCurve>& curves);
// For fits that are not FitResult (Cox, discrete).
CurveDocument make_document(std::string model_id, std::vector<std::string> param_names, const Vector& theta,
                            const Vector& std_errors, const std::vector<NlhCurve>& curves);

// NaN becomes null in JSON and "nan" in CSV.  Doubles are written with 17 significant digits.
std::string document_to_json(const CurveDocument& doc);
CurveDocument document_from_json(const std::string& text);
// Metadata in leading "# key,value" lines, then one row per curve point.
std::string document_to_csv(const CurveDocument& doc);
CurveDocument document_from_csv(const std::string& text);

// Power-study scenario.  Keys: truth {model, theta, frailty_variance}, censoring {kind, value},
// max_entry, n, model, types, flavors, probes [{kind: median|time|event, value}], level,
// band [b1, b2], band_thresholds, grid, and an optional prediction:
//   {kind: fixed}                                  truth hazard against the fitted model
//   {kind: local, theta, phi_poly [c0, c1, ..], delta}  phi(s) = sum c_k s^k
//   {kind: frailty, theta, sigma2}
struct PowerRequest {
  Scenario scenario;
  std::optional<AlternativeSpec> prediction;
  Vector prediction_theta;  // model parameter for local and frailty predictions
};
PowerRequest power_request_from_json(const std::string& text);
std::string power_report_json(const PowerRequest& request, const McSummary& summary,
                              const std::vector<PowerPrediction>& predictions);

void write_sample_csv(std::ostream& out, const SurvivalSample& sample);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  bool dashed = false;
  bool step = false;  // right-continuous steps instead of straight segments
};

struct SvgOptions {
  std::string title;
  std::string x_label = "time";
  std::string y_label = "NLH";
  std::optional<double> band;  // horizontal lines at +-band
  int width = 720;
  int height = 440;
};

// Throws DataError on an empty list or when no series has a finite point.
std::string render_svg(const std::vector<SvgSeries>& series, const SvgOptions& options);

// Type B curves are dashed.
SvgSeries svg_series(const NlhCurve& curve, std::string label = {});

}  // namespace nlh
