// nlh: goodness-of-fit plots for parametric survival models.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlh/cox_parametric.hpp"
#include "nlh/discrete_nlh.hpp"
#include "nlh/io.hpp"
#include "nlh/power_lab.hpp"

using namespace nlh;

namespace {

std::uint64_t default_seed() {
  if (const char* s = std::getenv("NLH_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw DataError(std::string("NLH_SEED is not an unsigned integer: ") + s);
    }
  }
  return 20240601ULL;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split_list(s)) {
    std::size_t used = 0;
    const double v = std::stod(x, &used);
    if (used != x.size()) throw DataError("bad number '" + x + "'");
    out.push_back(v);
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<PlotType> plot_types(const std::string& s) {
  std::vector<PlotType> out;
  for (const auto& t : split_list(s)) {
    if (t == "A") out.push_back(PlotType::A);
    else if (t == "B") out.push_back(PlotType::B);
    else if (t == "C") out.push_back(PlotType::C);
    else throw DataError("unknown plot type '" + t + "'");
  }
  if (out.empty()) throw DataError("no plot type given");
  return out;
}

std::optional<VarianceFlavor> flavor_of(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "pm") return VarianceFlavor::Parametric;
  if (s == "np") return VarianceFlavor::Nonparametric;
  throw DataError("flavor must be pm or np");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void print_estimates(const std::string& model, const std::vector<std::string>& names, const Vector& theta,
                     const Vector& se, double loglik, bool converged, const std::string& message) {
  std::printf("model %s\n", model.c_str());
  std::printf("%-10s %14s %14s\n", "parameter", "estimate", "approx sd");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const std::string name = static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                                        : "p" + std::to_string(i);
    std::printf("%-10s %14.6g %14.6g\n", name.c_str(), theta[i], i < se.size() ? se[i] : 0.0);
  }
  std::printf("log-likelihood %.10g%s\n", loglik, converged ? "" : "  (not converged)");
  if (!message.empty()) std::printf("note: %s\n", message.c_str());
}

struct Outputs {
  std::string json, csv, svg, title;
  double band = 1.96;

  void add(CLI::App* app) {
    app->add_option("--json", json, "write the curve document as JSON");
    app->add_option("--csv", csv, "write the curve document as CSV");
    app->add_option("--svg", svg, "write an SVG plot");
    app->add_option("--band", band, "band level drawn at +-band")->check(CLI::PositiveNumber);
    app->add_option("--title", title, "plot title");
  }

  void emit(CurveDocument doc, std::vector<NlhCurve> curves) const {
    doc.band_level = band;
    if (!json.empty()) write_file(json, document_to_json(doc));
    if (!csv.empty()) write_file(csv, document_to_csv(doc));
    if (!svg.empty()) {
      std::vector<SvgSeries> s;
      for (const auto& c : curves) s.push_back(svg_series(c));
      SvgOptions o;
      o.band = band;
      o.title = title;
      write_file(svg, render_svg(s, o));
    }
    if (json.empty() && csv.empty() && svg.empty()) std::cout << document_to_json(doc);
  }
};

SurvivalSample load_sample(const std::string& path, bool covariates_expected) {
  SurvivalSample s = read_sample_csv_file(path);
  if (!covariates_expected && s.covariate_dim() > 0)
    std::cerr << "warning: covariate columns ignored by this model\n";
  if (s.event_count() == 0) throw DataError("no events in " + path);
  return s;
}

FitResult do_fit(const HazardModel& m, const SurvivalSample& s, const std::string& window,
                 const std::string& fix, const std::string& init) {
  FitOptions opt;
  if (!init.empty()) opt.init = to_vector(numbers(init));
  if (!fix.empty()) {
    opt.fixed.assign(m.dim(), false);
    for (const auto& i : split_list(fix)) {
      const auto k = static_cast<std::size_t>(std::stoul(i));
      if (k >= m.dim()) throw DataError("fixed index out of range");
      opt.fixed[k] = true;
    }
    if (!opt.init) throw DataError("--fix needs --init for the held values");
  }
  if (!window.empty()) {
    const auto w = numbers(window);
    if (w.size() != 2) throw DataError("--window needs a,b");
    return fit_window(m, s, {w[0], w[1]}, opt);
  }
  return fit_ml(m, s, opt);
}

GWeight weight_of(const std::string& w) {
  if (w == "unit") return GWeight::unit();
  if (w == "log") return GWeight::log_minus_phi_hat();
  if (w == "frailty") return GWeight::one_minus_theta_s();
  throw DataError("weight must be unit, log or frailty");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalised local hazard plots for parametric survival models"};
  bool version = false;
  app.add_flag("--version", version, "print software and schema versions");
  app.require_subcommand(0, 1);

  // fit
  auto* fit = app.add_subcommand("fit", "maximum likelihood fit with approximate standard deviations");
  std::string model = "exponential", data, window, fix, init, fit_json, na_svg, hazard_svg, flavor;
  double bandwidth = 0.0;
  fit->add_option("--model", model, "exponential|weibull|gompertz|frailty|gamma|cpfrailty|fixed:<file>");
  fit->add_option("--data", data, "CSV with time,status[,entry][,covariates]")->required();
  fit->add_option("--window", window, "fit on (a,b] only");
  fit->add_option("--fix", fix, "indices of parameters held at --init");
  fit->add_option("--init", init, "starting values");
  fit->add_option("--json", fit_json, "write the estimates as JSON");
  fit->add_option("--na-svg", na_svg, "plot the Nelson-Aalen estimate against the fitted H");
  fit->add_option("--hazard-svg", hazard_svg, "plot the kernel-smoothed hazard against the fitted h");
  fit->add_option("--bandwidth", bandwidth, "kernel bandwidth (default: a fifth of the last event time)");

  // curve
  auto* curve = app.add_subcommand("curve", "NLH curves of Types A, B and C");
  std::string types = "A,B", weight = "unit";
  Outputs curve_out;
  curve->add_option("--model", model, "model name, as for fit");
  curve->add_option("--data", data, "CSV with time,status[,entry]")->required();
  curve->add_option("--type", types, "comma list of A, B, C");
  curve->add_option("--flavor", flavor, "pm or np (default depends on the model)");
  curve->add_option("--weight", weight, "Type C weight: unit, log or frailty");
  curve->add_option("--window", window, "restrict fit and curve to (a,b]");
  curve->add_option("--fix", fix, "indices of parameters held at --init");
  curve->add_option("--init", init, "starting values");
  curve_out.add(curve);

  // cox
  auto* cox = app.add_subcommand("cox", "exponential Cox model curves");
  std::string fixed_beta;
  Outputs cox_out;
  cox->add_option("--data", data, "CSV with time,status[,entry],z1,..")->required();
  cox->add_option("--type", types, "comma list of A, B");
  cox->add_option("--fixed-beta", fixed_beta, "hold the regression coefficients");
  cox_out.add(cox);

  // discrete
  auto* disc = app.add_subcommand("discrete", "grouped or discrete time curves");
  std::string table_path, cuts, dmodel = "constant", delta_svg;
  Outputs disc_out;
  disc->add_option("--data", table_path, "CSV with left,right,at_risk,events");
  disc->add_option("--sample", data, "individual data to group with --cuts");
  disc->add_option("--cuts", cuts, "cell boundaries for --sample");
  disc->add_option("--model", dmodel, "constant or grouped:<continuous model>");
  disc->add_option("--type", types, "comma list of A, B");
  disc->add_option("--delta-svg", delta_svg, "plot standardised cell residuals");
  disc_out.add(disc);

  // power
  auto* power = app.add_subcommand("power", "Monte Carlo power and calibration study");
  std::string scenario, power_out;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  bool serial = false;
  power->add_option("--scenario", scenario, "scenario JSON")->required();
  power->add_option("--reps", reps, "number of replications")->check(CLI::PositiveNumber);
  power->add_option("--seed", seed, "master seed (default NLH_SEED or a fixed value)");
  power->add_option("--out", power_out, "write the report here instead of stdout");
  power->add_flag("--serial", serial, "run replications on one thread");

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a survival sample");
  std::string theta, censoring = "none", sim_out;
  double frailty_variance = 0.0, max_entry = 0.0;
  std::size_t n = 100;
  sim->add_option("--model", model, "lifetime model (default exponential)");
  sim->add_option("--theta", theta, "parameters of the lifetime model")->required();
  sim->add_option("--frailty-variance", frailty_variance, "gamma frailty variance, 0 for none");
  sim->add_option("--censoring", censoring, "none | exponential:r | uniform:u | administrative:t");
  sim->add_option("--max-entry", max_entry, "delayed entry uniform on (0, v)");
  sim->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "seed (default NLH_SEED or a fixed value)");
  sim->add_option("--out", sim_out, "write the CSV here instead of stdout");

  // band
  auto* band = app.add_subcommand("band", "band and early-time exceedance probabilities");
  double b1 = 0.1, b2 = 0.9, threshold = 1.96;
  int early = 0;
  band->add_option("--b1", b1, "band start as a fraction of exposure");
  band->add_option("--b2", b2, "band end as a fraction of exposure");
  band->add_option("--threshold", threshold, "level c in P(max |NLH| > c)")->check(CLI::PositiveNumber);
  band->add_option("--early", early, "number of events k for the early-time probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (version) {
      std::printf("nlh %s (curve schema %d)\n", kSoftwareVersion, kSchemaVersion);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }
    if (!seed) seed = default_seed();

    if (*fit) {
      const auto s = load_sample(data, false);
      const ModelPtr m = make_model(model, s);
      const FitResult r = do_fit(*m, s, window, fix, init);
      print_estimates(m->id(), m->param_names(), r.theta_hat, r.std_errors, r.loglik, r.converged, r.message);
      if (!fit_json.empty()) write_file(fit_json, document_to_json(make_document(*m, r, {})));
      const RiskPath path = build_risk_path(s);
      const NelsonAalen na = nelson_aalen(path);
      const double last = path.event_times.back();
      std::vector<double> grid;
      for (int i = 0; i <= 200; ++i) grid.push_back(last * i / 200.0);
      if (!na_svg.empty()) {
        SvgSeries emp{"Nelson-Aalen", {}, {}, false, true};
        emp.x.push_back(0.0);
        emp.y.push_back(0.0);
        for (double t : na.cumulative_hazard.knots()) {
          emp.x.push_back(t);
          emp.y.push_back(na.cumulative_hazard(t));
        }
        SvgSeries par{"fitted", grid, {}, true, false};
        for (double t : grid) par.y.push_back(m->cum_hazard(t, r.theta_hat));
        SvgOptions o;
        o.y_label = "cumulative hazard";
        write_file(na_svg, render_svg({emp, par}, o));
      }
      if (!hazard_svg.empty()) {
        const double h = bandwidth > 0.0 ? bandwidth : last / 5.0;
        SvgSeries sm{"kernel smoothed", grid, kernel_smooth_hazard(na.cumulative_hazard, h, grid), false, false};
        SvgSeries par{"fitted", grid, {}, true, false};
        for (double t : grid) par.y.push_back(t > 0.0 ? m->hazard(t, r.theta_hat) : std::nan(""));
        SvgOptions o;
        o.y_label = "hazard";
        write_file(hazard_svg, render_svg({sm, par}, o));
      }
      return 0;
    }

    if (*curve) {
      const auto s = load_sample(data, false);
      const ModelPtr m = make_model(model, s);
      const FitResult r = do_fit(*m, s, window, fix, init);
      const auto fl = flavor_of(flavor);
      std::vector<NlhCurve> curves;
      for (auto t : plot_types(types)) {
        NlhCurve c = r.window ? curve_windowed(*m, r, s, t, fl, weight_of(weight))
                              : nlh_curve(*m, r, s, t, fl, weight_of(weight));
        c.band_level = curve_out.band;
        curves.push_back(std::move(c));
      }
      print_estimates(m->id(), m->param_names(), r.theta_hat, r.std_errors, r.loglik, r.converged, r.message);
      curve_out.emit(make_document(*m, r, curves), curves);
      return 0;
    }

    if (*cox) {
      const auto s = load_sample(data, true);
      if (s.covariate_dim() == 0) throw DataError("the Cox model needs covariate columns");
      CoxOptions opt;
      if (!fixed_beta.empty()) opt.fixed_beta = to_vector(numbers(fixed_beta));
      const CoxFit f = fit_cox_exponential(s, opt);
      std::vector<std::string> names{"theta"};
      for (std::size_t k = 0; k < s.covariate_dim(); ++k) names.push_back("beta" + std::to_string(k + 1));
      print_estimates("cox-exponential", names, f.params(), f.std_errors, f.loglik, f.converged, f.message);
      std::vector<NlhCurve> curves;
      for (auto t : plot_types(types)) {
        if (t == PlotType::C) throw DataError("Cox curves cover Types A and B");
        curves.push_back(t == PlotType::A ? cox_curve_type_a(f, s) : cox_curve_type_b(f, s));
        curves.back().band_level = cox_out.band;
      }
      cox_out.emit(make_document("cox-exponential", names, f.params(), f.std_errors, curves), curves);
      return 0;
    }

    if (*disc) {
      DiscreteTable table;
      if (!table_path.empty()) {
        table = read_discrete_csv_file(table_path);
      } else {
        if (data.empty() || cuts.empty()) throw DataError("give --data, or --sample with --cuts");
        const auto s = load_sample(data, false);
        const auto c = numbers(cuts);
        table = group_to_discrete(s, c);
      }
      long events = 0;
      for (long e : table.events) events += e;
      if (events == 0) throw DataError("no events in the table");
      DiscreteModelPtr dm;
      if (dmodel == "constant") {
        dm = constant_discrete_model();
      } else if (dmodel.rfind("grouped:", 0) == 0) {
        dm = grouped_model(make_model(dmodel.substr(8), table.right.back()));
      } else {
        throw DataError("discrete model must be constant or grouped:<model>");
      }
      const DiscreteFit f = fit_discrete(*dm, table);
      print_estimates(dm->id(), dm->param_names(), f.theta_hat, f.std_errors, f.loglik, f.converged, f.message);
      std::vector<NlhCurve> curves;
      for (auto t : plot_types(types)) {
        curves.push_back(discrete_curve(*dm, f, table, t));
        curves.back().band_level = disc_out.band;
      }
      if (!delta_svg.empty()) {
        const DeltaPlot d = delta_plot(*dm, f, table);
        SvgSeries s{"cell residual", d.midpoints, d.residual, false, false};
        SvgOptions o;
        o.y_label = "standardised residual";
        o.band = disc_out.band;
        write_file(delta_svg, render_svg({s}, o));
      }
      disc_out.emit(make_document(dm->id(), dm->param_names(), f.theta_hat, f.std_errors, curves), curves);
      return 0;
    }

    if (*power) {
      const PowerRequest req = power_request_from_json(read_file(scenario));
      const McSummary m =
          mc_study(req.scenario, reps, seed, serial ? ExecutionPolicy::Serial : ExecutionPolicy::OpenMP);
      std::vector<PowerPrediction> preds;
      if (req.prediction && !req.scenario.grid.empty()) {
        const Scenario& sc = req.scenario;
        const ModelPtr fm = make_model(sc.model, 1.0);
        const Vector th = req.prediction_theta.size() ? req.prediction_theta : sc.truth.theta;
        const bool fixed = std::holds_alternative<FixedHazard>(*req.prediction);
        // no censoring: the survivor function of the truth (fixed) or of the null model (local, frailty)
        const bool analytic = sc.censoring.kind == CensoringSpec::Kind::None && sc.truncation.max_entry == 0.0 &&
                              (!fixed || sc.truth.frailty_variance == 0.0);
        const Exposure ex = !analytic ? Exposure::from_sample(simulate_sample(sc.truth, sc.censoring, sc.truncation,
                                                                              20000, split_seed(seed, ~0ULL)))
                            : fixed   ? Exposure::survivor(*sc.truth.model, sc.truth.theta)
                                      : Exposure::survivor(*fm, th);
        for (auto t : sc.types) {
          if (t == PlotType::C) continue;
          preds.push_back(predict_power(*req.prediction, *fm, th, t, ex, static_cast<double>(sc.n), sc.grid));
        }
      }
      const std::string report = power_report_json(req, m, preds);
      if (power_out.empty()) std::cout << report;
      else write_file(power_out, report);
      return 0;
    }

    if (*sim) {
      DistSpec d{make_model(model, 1.0), to_vector(numbers(theta)), frailty_variance};
      CensoringSpec c;
      if (censoring != "none") {
        const auto colon = censoring.find(':');
        if (colon == std::string::npos) throw DataError("censoring must look like kind:value");
        const std::string kind = censoring.substr(0, colon);
        const double v = std::stod(censoring.substr(colon + 1));
        if (kind == "exponential") c = CensoringSpec::exponential(v);
        else if (kind == "uniform") c = CensoringSpec::uniform(v);
        else if (kind == "administrative") c = CensoringSpec::administrative(v);
        else throw DataError("unknown censoring kind '" + kind + "'");
      }
      const SurvivalSample s = simulate_sample(d, c, {max_entry}, n, seed);
      if (sim_out.empty()) {
        write_sample_csv(std::cout, s);
      } else {
        std::ofstream out(sim_out);
        if (!out) throw DataError("cannot write " + sim_out);
        write_sample_csv(out, s);
      }
      return 0;
    }

    if (*band) {
      if (early > 0) {
        std::printf("early k=%d threshold=%g probability=%.6f\n", early, threshold,
                    early_exceedance_prob(early, threshold));
      } else {
        const BandCalibration b = max_band_exceedance(b1, b2, threshold);
        std::printf("band [%g, %g] threshold=%g probability=%.6f%s\n", b1, b2, threshold, b.probability,
                    b.reliable ? "" : "  (approximation unreliable below 1)");
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
