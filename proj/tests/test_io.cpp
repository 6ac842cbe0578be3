#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "nlh/io.hpp"

using namespace nlh;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

SurvivalSample small_sample() {
  const std::vector<double> t{0.31, 0.52, 0.77, 1.13, 1.4, 1.9, 2.6, 3.3};
  const std::vector<int> d{1, 1, 0, 1, 1, 0, 1, 1};
  return SurvivalSample::from_times(t, d);
}

CurveDocument sample_document() {
  const auto s = small_sample();
  const auto m = weibull_model();
  const auto fit = fit_ml(*m, s);
  std::vector<NlhCurve> curves{nlh_curve(*m, fit, s, PlotType::A), nlh_curve(*m, fit, s, PlotType::B)};
  return make_document(*m, fit, curves);
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

void expect_same(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(same(a[i], b[i])) << i << ": " << a[i] << " vs " << b[i];
}

void expect_same(const CurveDocument& a, const CurveDocument& b) {
  EXPECT_EQ(a.schema_version, b.schema_version);
  EXPECT_EQ(a.software_version, b.software_version);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.param_names, b.param_names);
  expect_same(a.theta, b.theta);
  expect_same(a.std_errors, b.std_errors);
  EXPECT_EQ(a.flavor, b.flavor);
  EXPECT_EQ(a.window.has_value(), b.window.has_value());
  if (a.window && b.window) {
    EXPECT_EQ(a.window->a, b.window->a);
    EXPECT_EQ(a.window->b, b.window->b);
  }
  EXPECT_EQ(a.band_level, b.band_level);
  ASSERT_EQ(a.curves.size(), b.curves.size());
  for (std::size_t c = 0; c < a.curves.size(); ++c) {
    EXPECT_EQ(a.curves[c].label, b.curves[c].label);
    EXPECT_EQ(a.curves[c].type, b.curves[c].type);
    EXPECT_EQ(a.curves[c].flavor, b.curves[c].flavor);
    EXPECT_EQ(a.curves[c].weight, b.curves[c].weight);
    expect_same(a.curves[c].times, b.curves[c].times);
    expect_same(a.curves[c].d_n, b.curves[c].d_n);
    expect_same(a.curves[c].kappa, b.curves[c].kappa);
    expect_same(a.curves[c].nlh, b.curves[c].nlh);
  }
}

}  // namespace

TEST(CurveDocument, CarriesFitMetadata) {
  const auto doc = sample_document();
  EXPECT_EQ(doc.schema_version, kSchemaVersion);
  EXPECT_EQ(doc.model, "weibull");
  ASSERT_EQ(doc.theta.size(), 2u);
  ASSERT_EQ(doc.std_errors.size(), 2u);
  EXPECT_GT(doc.std_errors[0], 0.0);
  ASSERT_EQ(doc.curves.size(), 2u);
  EXPECT_EQ(doc.curves[1].type, "B");
  // Type B is undefined at the last event
  EXPECT_TRUE(std::isnan(doc.curves[1].nlh.back()));
}

TEST(CurveDocument, JsonRoundTripIsLossless) {
  auto doc = sample_document();
  doc.window = WeightWindow{0.1 + 0.2, 1.0 / 3.0};
  doc.theta.push_back(5e-324);
  doc.std_errors.push_back(-1.7976931348623157e308);
  const auto back = document_from_json(document_to_json(doc));
  expect_same(doc, back);
}

TEST(CurveDocument, CsvRoundTripIsLossless) {
  auto doc = sample_document();
  doc.curves[0].d_n[0] = std::nextafter(0.1, 1.0);
  const auto back = document_from_csv(document_to_csv(doc));
  expect_same(doc, back);
  doc.window = WeightWindow{0.25, 2.0};
  expect_same(doc, document_from_csv(document_to_csv(doc)));
}

TEST(CurveDocument, RejectsOtherSchemas) {
  auto doc = sample_document();
  doc.schema_version = kSchemaVersion + 1;
  EXPECT_THROW(document_from_json(document_to_json(doc)), DataError);
  EXPECT_THROW(document_from_csv(document_to_csv(doc)), DataError);
  EXPECT_THROW(document_from_json("{not json"), DataError);
}

TEST(CurveDocument, CsvErrorsCarryLineNumbers) {
  auto text = document_to_csv(sample_document());
  text += "0,Type A,A,pm,unit,1.0,2.0\n";
  try {
    document_from_csv(text);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line "), std::string::npos);
  }
}

TEST(SampleCsv, WriteThenRead) {
  std::vector<Subject> subj(3);
  subj[0] = {1.25, 1, 0.0, {}};
  subj[1] = {0.1 + 0.2, 0, 0.05, {}};
  subj[2] = {2.0 / 3.0, 1, 0.125, {}};
  const SurvivalSample s(subj);
  std::stringstream io;
  write_sample_csv(io, s);
  const auto back = read_sample_csv(io);
  ASSERT_EQ(back.n(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].exit_time, s[i].exit_time);
    EXPECT_EQ(back[i].status, s[i].status);
    EXPECT_EQ(back[i].entry_time, s[i].entry_time);
  }
}

TEST(Svg, EmptyInputIsAnError) {
  EXPECT_THROW(render_svg({}, {}), DataError);
  SvgSeries nothing{"x", {1.0}, {kNaN}, false, false};
  EXPECT_THROW(render_svg({nothing}, {}), DataError);
}

TEST(Svg, LegendBandAndDashes) {
  const auto s = small_sample();
  const auto m = exponential_model();
  const auto fit = fit_ml(*m, s);
  std::vector<SvgSeries> series{svg_series(nlh_curve(*m, fit, s, PlotType::A)),
                                svg_series(nlh_curve(*m, fit, s, PlotType::B))};
  EXPECT_FALSE(series[0].dashed);
  EXPECT_TRUE(series[1].dashed);
  SvgOptions o;
  o.band = 1.96;
  const std::string svg = render_svg(series, o);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find(">Type A</text>"), std::string::npos);
  EXPECT_NE(svg.find(">Type B</text>"), std::string::npos);
  EXPECT_NE(svg.find(">NLH</text>"), std::string::npos);
  EXPECT_NE(svg.find(">time</text>"), std::string::npos);
  std::size_t bands = 0;
  for (auto p = svg.find("class=\"band\""); p != std::string::npos; p = svg.find("class=\"band\"", p + 1)) ++bands;
  EXPECT_EQ(bands, 2u);
  // one dashed polyline and one dashed legend sample, both for Type B
  std::size_t dashed = 0;
  for (auto p = svg.find("stroke-dasharray=\"7,4\""); p != std::string::npos;
       p = svg.find("stroke-dasharray=\"7,4\"", p + 1))
    ++dashed;
  EXPECT_EQ(dashed, 2u);
  EXPECT_EQ(svg, render_svg(series, o));
}

TEST(Svg, NanSplitsThePolyline) {
  SvgSeries s{"a", {0, 1, 2, 3, 4}, {0, 1, kNaN, 1, 0}, false, false};
  const std::string svg = render_svg({s}, {});
  std::size_t lines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
}

TEST(Svg, EscapesLabels) {
  SvgSeries s{"a<b & c", {0, 1}, {0, 1}, false, false};
  const std::string svg = render_svg({s}, {});
  EXPECT_NE(svg.find("a&lt;b &amp; c"), std::string::npos);
}

TEST(PowerRequest, ParsesScenario) {
  const std::string text = R"({
    "truth": {"model": "weibull", "theta": [10, 1.3]},
    "censoring": {"kind": "exponential", "value": 2.0},
    "n": 250, "model": "exponential", "types": ["B"], "flavors": ["pm", "np"],
    "probes": [{"kind": "median"}, {"kind": "time", "value": 0.2}, {"kind": "event", "value": 4}],
    "band": [0.2, 0.8], "band_thresholds": [2.5], "grid": [0.1, 0.2],
    "prediction": {"kind": "frailty", "theta": 1.5, "sigma2": 0.2}
  })";
  const auto r = power_request_from_json(text);
  EXPECT_EQ(r.scenario.n, 250u);
  EXPECT_EQ(r.scenario.truth.model->id(), "weibull");
  EXPECT_EQ(r.scenario.censoring.kind, CensoringSpec::Kind::Exponential);
  EXPECT_EQ(r.scenario.flavors.size(), 2u);
  ASSERT_EQ(r.scenario.probes.size(), 3u);
  EXPECT_EQ(r.scenario.probes[2].kind, Probe::Kind::EventIndex);
  EXPECT_DOUBLE_EQ(r.scenario.b1, 0.2);
  ASSERT_TRUE(r.prediction.has_value());
  EXPECT_TRUE(std::holds_alternative<FrailtyContamination>(*r.prediction));
  EXPECT_DOUBLE_EQ(r.prediction_theta[0], 1.5);

  const auto local = power_request_from_json(R"({"truth": {"model": "exponential", "theta": [1]},
      "prediction": {"kind": "local", "theta": [1], "phi_poly": [1, -2], "delta": 3}})");
  const auto& la = std::get<LocalAlternative>(*local.prediction);
  EXPECT_DOUBLE_EQ(la.phi(0.5), 0.0);
  EXPECT_DOUBLE_EQ(la.phi(2.0), -3.0);

  EXPECT_THROW(power_request_from_json(R"({"truth": {"model": "exponential", "theta": [1]}, "band": [0.9, 0.1]})"),
               DataError);
  EXPECT_THROW(power_request_from_json(R"({"n": 5})"), DataError);
}
