#include "nlh/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace nlh {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw DataError("bad number '" + s + "'");
  return v;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> from_numbers(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(from_number(x));
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt17(v[i]);
  return s;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& f : split(s, ';')) out.push_back(parse_double(f));
  return out;
}

}  // namespace

CurveTable curve_table(const NlhCurve& c, std::string label) {
  CurveTable t;
  t.type = to_string(c.type);
  t.flavor = to_string(c.flavor);
  t.weight = c.weight;
  t.label = label.empty() ? "Type " + t.type : std::move(label);
  t.times = c.times;
  t.d_n = c.d_n;
  t.kappa = c.kappa;
  t.nlh = c.nlh;
  return t;
}

CurveDocument make_document(std::string model_id, std::vector<std::string> param_names, const Vector& theta,
                            const Vector& std_errors, const std::vector<NlhCurve>& curves) {
  CurveDocument doc;
  doc.model = std::move(model_id);
  doc.param_names = std::move(param_names);
  doc.theta.assign(theta.data(), theta.data() + theta.size());
  doc.std_errors.assign(std_errors.data(), std_errors.data() + std_errors.size());
  if (!curves.empty()) {
    doc.band_level = curves.front().band_level;
    doc.flavor = to_string(curves.front().flavor);
    doc.window = curves.front().window;
  }
  for (const auto& c : curves) doc.curves.push_back(curve_table(c));
  return doc;
}

CurveDocument make_document(const HazardModel& model, const FitResult& fit,
                            const std::vector<NlhCurve>& curves) {
  CurveDocument doc = make_document(model.id(), model.param_names(), fit.theta_hat, fit.std_errors, curves);
  if (curves.empty()) doc.flavor = to_string(fit.cov_flavor);
  doc.window = fit.window;
  return doc;
}

std::string document_to_json(const CurveDocument& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  j["software_version"] = doc.software_version;
  j["model"] = doc.model;
  j["param_names"] = doc.param_names;
  j["theta"] = numbers(doc.theta);
  j["std_errors"] = numbers(doc.std_errors);
  j["flavor"] = doc.flavor;
  j["window"] = doc.window ? json::array({number(doc.window->a), number(doc.window->b)}) : json(nullptr);
  j["band_level"] = doc.band_level;
  j["curves"] = json::array();
  for (const auto& c : doc.curves) {
    json k;
    k["label"] = c.label;
    k["type"] = c.type;
    k["flavor"] = c.flavor;
    k["weight"] = c.weight;
    k["time"] = numbers(c.times);
    k["d_n"] = numbers(c.d_n);
    k["kappa"] = numbers(c.kappa);
    k["nlh"] = numbers(c.nlh);
    j["curves"].push_back(std::move(k));
  }
  return j.dump(2) + "\n";
}

CurveDocument document_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("curve document: ") + e.what());
  }
  CurveDocument doc;
  doc.schema_version = j.at("schema_version").get<int>();
  if (doc.schema_version != kSchemaVersion)
    throw DataError("unsupported curve document schema " + std::to_string(doc.schema_version));
  doc.software_version = j.at("software_version").get<std::string>();
  doc.model = j.at("model").get<std::string>();
  doc.param_names = j.at("param_names").get<std::vector<std::string>>();
  doc.theta = from_numbers(j.at("theta"));
  doc.std_errors = from_numbers(j.at("std_errors"));
  doc.flavor = j.at("flavor").get<std::string>();
  if (!j.at("window").is_null())
    doc.window = WeightWindow{from_number(j["window"][0]), from_number(j["window"][1])};
  doc.band_level = j.at("band_level").get<double>();
  for (const auto& k : j.at("curves")) {
    CurveTable c;
    c.label = k.at("label").get<std::string>();
    c.type = k.at("type").get<std::string>();
    c.flavor = k.at("flavor").get<std::string>();
    c.weight = k.at("weight").get<std::string>();
    c.times = from_numbers(k.at("time"));
    c.d_n = from_numbers(k.at("d_n"));
    c.kappa = from_numbers(k.at("kappa"));
    c.nlh = from_numbers(k.at("nlh"));
    doc.curves.push_back(std::move(c));
  }
  return doc;
}

std::string document_to_csv(const CurveDocument& doc) {
  std::ostringstream out;
  out << "# schema_version," << doc.schema_version << "\n";
  out << "# software_version," << doc.software_version << "\n";
  out << "# model," << doc.model << "\n";
  std::string names;
  for (std::size_t i = 0; i < doc.param_names.size(); ++i) names += (i ? ";" : "") + doc.param_names[i];
  out << "# param_names," << names << "\n";
  out << "# theta," << join(doc.theta) << "\n";
  out << "# std_errors," << join(doc.std_errors) << "\n";
  out << "# flavor," << doc.flavor << "\n";
  out << "# window," << (doc.window ? fmt17(doc.window->a) + ";" + fmt17(doc.window->b) : "") << "\n";
  out << "# band_level," << fmt17(doc.band_level) << "\n";
  out << "curve,label,type,flavor,weight,time,d_n,kappa,nlh\n";
  for (std::size_t c = 0; c < doc.curves.size(); ++c) {
    const auto& t = doc.curves[c];
    for (std::size_t i = 0; i < t.times.size(); ++i)
      out << c << ',' << t.label << ',' << t.type << ',' << t.flavor << ',' << t.weight << ',' << fmt17(t.times[i])
          << ',' << fmt17(t.d_n[i]) << ',' << fmt17(t.kappa[i]) << ',' << fmt17(t.nlh[i]) << "\n";
  }
  return out.str();
}

CurveDocument document_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> meta;
  CurveDocument doc;
  std::size_t line_no = 0;
  bool header = false;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.rfind("# ", 0) == 0) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("metadata line without a value");
        meta[line.substr(2, comma - 2)] = line.substr(comma + 1);
        continue;
      }
      if (!header) {
        if (line != "curve,label,type,flavor,weight,time,d_n,kappa,nlh") throw DataError("unexpected header");
        header = true;
        continue;
      }
      const auto f = split(line, ',');
      if (f.size() != 9) throw DataError("expected 9 fields");
      const auto idx = static_cast<std::size_t>(std::stoul(f[0]));
      if (idx == doc.curves.size()) {
        doc.curves.push_back({f[1], f[2], f[3], f[4], {}, {}, {}, {}});
      } else if (idx + 1 != doc.curves.size()) {
        throw DataError("curve rows out of order");
      }
      auto& t = doc.curves.back();
      t.times.push_back(parse_double(f[5]));
      t.d_n.push_back(parse_double(f[6]));
      t.kappa.push_back(parse_double(f[7]));
      t.nlh.push_back(parse_double(f[8]));
    }
  } catch (const std::exception& e) {
    throw DataError("line " + std::to_string(line_no) + ": " + e.what());
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw DataError(std::string("curve CSV lacks metadata '") + key + "'");
    return it->second;
  };
  doc.schema_version = std::stoi(need("schema_version"));
  if (doc.schema_version != kSchemaVersion)
    throw DataError("unsupported curve document schema " + std::to_string(doc.schema_version));
  doc.software_version = need("software_version");
  doc.model = need("model");
  doc.param_names.clear();
  if (!need("param_names").empty()) doc.param_names = split(need("param_names"), ';');
  doc.theta = split_numbers(need("theta"));
  doc.std_errors = split_numbers(need("std_errors"));
  doc.flavor = need("flavor");
  const auto w = split_numbers(need("window"));
  if (w.size() == 2) doc.window = WeightWindow{w[0], w[1]};
  doc.band_level = parse_double(need("band_level"));
  return doc;
}

void write_sample_csv(std::ostream& out, const SurvivalSample& sample) {
  const bool entry = sample.has_delayed_entry();
  out << "time,status";
  if (entry) out << ",entry";
  for (std::size_t k = 0; k < sample.covariate_dim(); ++k) out << ",z" << k + 1;
  out << "\n";
  for (const auto& s : sample.subjects()) {
    out << fmt17(s.exit_time) << ',' << s.status;
    if (entry) out << ',' << fmt17(s.entry_time);
    for (double z : s.covariates) out << ',' << fmt17(z);
    out << "\n";
  }
}

// ---- power studies

namespace {

PlotType plot_type(const std::string& s) {
  if (s == "A") return PlotType::A;
  if (s == "B") return PlotType::B;
  if (s == "C") return PlotType::C;
  throw DataError("unknown plot type '" + s + "'");
}

VarianceFlavor flavor_of(const std::string& s) {
  if (s == "pm" || s == "parametric") return VarianceFlavor::Parametric;
  if (s == "np" || s == "nonparametric") return VarianceFlavor::Nonparametric;
  throw DataError("unknown variance flavor '" + s + "'");
}

Vector to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

PowerRequest power_request_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("scenario: ") + e.what());
  }
  PowerRequest req;
  Scenario& sc = req.scenario;
  try {
    const auto& truth = j.at("truth");
    const std::string truth_id = truth.at("model").get<std::string>();
    sc.truth.model = make_model(truth_id, 1.0);
    sc.truth.theta = to_vector(truth.at("theta"));
    sc.truth.frailty_variance = truth.value("frailty_variance", 0.0);
    if (j.contains("censoring")) {
      const auto& c = j["censoring"];
      const std::string kind = c.at("kind").get<std::string>();
      const double v = c.value("value", 0.0);
      if (kind == "none") sc.censoring = CensoringSpec::none();
      else if (kind == "exponential") sc.censoring = CensoringSpec::exponential(v);
      else if (kind == "uniform") sc.censoring = CensoringSpec::uniform(v);
      else if (kind == "administrative") sc.censoring = CensoringSpec::administrative(v);
      else throw DataError("unknown censoring kind '" + kind + "'");
    }
    sc.truncation.max_entry = j.value("max_entry", 0.0);
    sc.n = j.value("n", sc.n);
    sc.model = j.value("model", sc.model);
    if (j.contains("types")) {
      sc.types.clear();
      for (const auto& t : j["types"]) sc.types.push_back(plot_type(t.get<std::string>()));
    }
    if (j.contains("flavors")) {
      sc.flavors.clear();
      for (const auto& f : j["flavors"]) sc.flavors.push_back(flavor_of(f.get<std::string>()));
    }
    if (j.contains("probes")) {
      sc.probes.clear();
      for (const auto& p : j["probes"]) {
        const std::string kind = p.at("kind").get<std::string>();
        if (kind == "median") sc.probes.push_back(Probe::median_event());
        else if (kind == "time") sc.probes.push_back(Probe::time(p.at("value").get<double>()));
        else if (kind == "event") sc.probes.push_back(Probe::event(p.at("value").get<int>()));
        else throw DataError("unknown probe kind '" + kind + "'");
      }
    }
    sc.level = j.value("level", sc.level);
    if (j.contains("band")) {
      sc.b1 = j["band"].at(0).get<double>();
      sc.b2 = j["band"].at(1).get<double>();
    }
    if (j.contains("band_thresholds")) sc.band_thresholds = j["band_thresholds"].get<std::vector<double>>();
    if (j.contains("grid")) sc.grid = j["grid"].get<std::vector<double>>();
    if (j.contains("prediction")) {
      const auto& p = j["prediction"];
      const std::string kind = p.at("kind").get<std::string>();
      if (kind == "fixed") {
        const ModelPtr m = sc.truth.model;
        const Vector th = sc.truth.theta;
        if (sc.truth.frailty_variance > 0.0) throw DataError("fixed predictions need a truth without frailty");
        req.prediction = FixedHazard{[m, th](double s) { return m->hazard(s, th); },
                                     [m, th](double s) { return m->cum_hazard(s, th); }};
      } else if (kind == "local") {
        const auto c = p.at("phi_poly").get<std::vector<double>>();
        req.prediction_theta = to_vector(p.at("theta"));
        req.prediction = LocalAlternative{[c](double s) {
                                            double v = 0.0;
                                            for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
                                            return v;
                                          },
                                          p.at("delta").get<double>()};
      } else if (kind == "frailty") {
        const double th = p.at("theta").get<double>();
        req.prediction_theta = Vector::Constant(1, th);
        req.prediction = FrailtyContamination{p.at("sigma2").get<double>(), th};
      } else {
        throw DataError("unknown prediction kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scenario: ") + e.what());
  }
  if (sc.n == 0) throw DataError("scenario: n must be positive");
  if (!(sc.b1 > 0.0 && sc.b1 < sc.b2 && sc.b2 < 1.0)) throw DataError("scenario: band needs 0 < b1 < b2 < 1");
  return req;
}

std::string power_report_json(const PowerRequest& req, const McSummary& m,
                              const std::vector<PowerPrediction>& predictions) {
  const Scenario& sc = req.scenario;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["software_version"] = kSoftwareVersion;
  j["seed"] = m.seed;
  j["replications"] = m.replications;
  j["failures"] = m.failures;
  j["n"] = sc.n;
  j["model"] = sc.model;
  j["level"] = sc.level;
  j["band"] = {sc.b1, sc.b2};
  j["band_thresholds"] = sc.band_thresholds;
  j["grid"] = sc.grid;
  j["series"] = json::array();
  for (const auto& s : m.series) {
    json k;
    k["type"] = to_string(s.type);
    k["flavor"] = to_string(s.flavor);
    k["probe_exceedance"] = numbers(s.probe_exceedance);
    k["probe_mean"] = numbers(s.probe_mean);
    k["probe_se"] = numbers(s.probe_se);
    k["probe_count"] = s.probe_count;
    k["band_exceedance"] = numbers(s.band_exceedance);
    k["band_count"] = s.band_count;
    k["grid_mean"] = numbers(s.grid_mean);
    k["grid_se"] = numbers(s.grid_se);
    k["grid_drift"] = numbers(s.grid_drift);
    j["series"].push_back(std::move(k));
  }
  j["predictions"] = json::array();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    json k;
    k["type"] = i < sc.types.size() ? to_string(sc.types[i]) : "";
    k["times"] = numbers(p.times);
    k["mean"] = numbers(p.mean);
    if (!p.drift.empty()) k["drift"] = numbers(p.drift);
    if (p.theta0.size() > 0) k["theta0"] = numbers(std::vector<double>(p.theta0.data(), p.theta0.data() + p.theta0.size()));
    k["note"] = p.note;
    j["predictions"].push_back(std::move(k));
  }
  return j.dump(2) + "\n";
}

// ---- SVG

namespace {

std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
    out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series, const SvgOptions& opt) {
  if (series.empty()) throw DataError("nothing to plot");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DataError("series '" + s.label + "' has mismatched lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) throw DataError("no finite points to plot");
  x0 = std::min(x0, 0.0);
  if (opt.band) {
    y0 = std::min(y0, -*opt.band);
    y1 = std::max(y1, *opt.band);
  }
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    o << "<text x=\"" << fmt_px(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(opt.title) << "</text>\n";
  o << "<rect x=\"" << fmt_px(left) << "\" y=\"" << fmt_px(top) << "\" width=\"" << fmt_px(pw) << "\" height=\""
    << fmt_px(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(x0, x1)) {
    o << "<line x1=\"" << fmt_px(px(t)) << "\" y1=\"" << fmt_px(top + ph) << "\" x2=\"" << fmt_px(px(t))
      << "\" y2=\"" << fmt_px(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt_px(px(t)) << "\" y=\"" << fmt_px(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    o << "<line x1=\"" << fmt_px(left - 5) << "\" y1=\"" << fmt_px(py(t)) << "\" x2=\"" << fmt_px(left)
      << "\" y2=\"" << fmt_px(py(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt_px(left - 8) << "\" y=\"" << fmt_px(py(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(t) << "</text>\n";
  }
  o << "<text x=\"" << fmt_px(left + pw / 2) << "\" y=\"" << fmt_px(opt.height - 12.0)
    << "\" text-anchor=\"middle\">" << escape(opt.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << fmt_px(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(opt.y_label) << "</text>\n";
  if (y0 < 0.0 && y1 > 0.0)
    o << "<line x1=\"" << fmt_px(left) << "\" y1=\"" << fmt_px(py(0)) << "\" x2=\"" << fmt_px(left + pw)
      << "\" y2=\"" << fmt_px(py(0)) << "\" stroke=\"#999\"/>\n";
  if (opt.band)
    for (double b : {*opt.band, -*opt.band})
      o << "<line class=\"band\" x1=\"" << fmt_px(left) << "\" y1=\"" << fmt_px(py(b)) << "\" x2=\""
        << fmt_px(left + pw) << "\" y2=\"" << fmt_px(py(b)) << "\" stroke=\"#c33\" stroke-dasharray=\"2,3\"/>\n";

  static const char* colors[] = {"#1f4e9c", "#2a8a3e", "#8a2a8a", "#b06d00", "#444444"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 5];
    std::string dash = s.dashed ? " stroke-dasharray=\"7,4\"" : "";
    std::string points;
    auto flush = [&] {
      if (!points.empty())
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash << " points=\""
          << points << "\"/>\n";
      points.clear();
    };
    double last_y = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        last_y = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (s.step && std::isfinite(last_y)) points += fmt_px(px(s.x[i])) + "," + fmt_px(py(last_y)) + " ";
      points += fmt_px(px(s.x[i])) + "," + fmt_px(py(s.y[i])) + " ";
      last_y = s.y[i];
    }
    flush();
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << fmt_px(left + pw + 12) << "\" y1=\"" << fmt_px(ly) << "\" x2=\"" << fmt_px(left + pw + 42)
      << "\" y2=\"" << fmt_px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash << "/>\n";
    o << "<text x=\"" << fmt_px(left + pw + 48) << "\" y=\"" << fmt_px(ly + 4) << "\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

SvgSeries svg_series(const NlhCurve& c, std::string label) {
  SvgSeries s;
  s.label = label.empty() ? "Type " + to_string(c.type) : std::move(label);
  s.dashed = c.type == PlotType::B;
  for (std::size_t i = 0; i < c.size(); ++i) {
    s.x.push_back(c.times[i]);
    s.y.push_back(c.nlh[i]);
  }
  return s;
}

}  // namespace nlh
