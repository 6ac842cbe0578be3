#include "nlh/nlh_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlh/quadrature.hpp"
#include "nlh/special_functions.hpp"

namespace nlh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kGapSamples = 4;

struct Segment {
  double lo;
  double hi;
  int y;
};

struct GapMoments {
  double gh = 0.0;   // \int G h
  double g2h = 0.0;  // \int G^2 h
  Vector gpsih;      // \int G psi h
};

// G together with exact gap moments when the (model, weight) pair has them.
struct ResolvedWeight {
  bool unit = true;
  std::function<double(double)> g;
  std::function<GapMoments(double, double)> exact;
};

double xlogx(double s) { return s > 0.0 ? s * std::log(s) : 0.0; }
double xlog2x(double s) {
  if (s <= 0.0) return 0.0;
  const double l = std::log(s);
  return s * l * l;
}

ResolvedWeight resolve(const GWeight& w, const HazardModel& m, const Vector& theta,
                       const SurvivalSample& sample, const RiskPath& path,
                       const std::vector<Eigen::Index>& free, const Matrix* sigma_pm_inv) {
  ResolvedWeight r;
  const bool exponential = m.id() == "exponential";
  switch (w.kind) {
    case GWeight::Kind::Unit:
      return r;
    case GWeight::Kind::Deterministic:
      if (!w.g) throw ModelError("deterministic weight needs a function");
      r.unit = false;
      r.g = w.g;
      return r;
    case GWeight::Kind::LogMinusPhiHat: {
      const double phi = phi_hat(sample);
      r.unit = false;
      r.g = [phi](double s) { return std::log(s) - phi; };
      if (exponential) {
        const double th = theta[0];
        // antiderivatives of (log s - phi) and (log s - phi)^2
        auto f1 = [phi](double s) { return xlogx(s) - s - phi * s; };
        auto f2 = [phi](double s) {
          return xlog2x(s) - 2.0 * xlogx(s) + 2.0 * s - 2.0 * phi * (xlogx(s) - s) + phi * phi * s;
        };
        r.exact = [th, f1, f2](double a, double b) {
          GapMoments gm;
          const double i1 = f1(b) - f1(a);
          gm.gh = th * i1;
          gm.g2h = th * (f2(b) - f2(a));
          gm.gpsih = Vector::Constant(1, i1);
          return gm;
        };
      }
      return r;
    }
    case GWeight::Kind::OneMinusThetaS: {
      const double th = theta[0];
      r.unit = false;
      r.g = [th](double s) { return 1.0 - th * s; };
      if (exponential) {
        r.exact = [th](double a, double b) {
          auto f1 = [th](double s) { return s - 0.5 * th * s * s; };
          auto f2 = [th](double s) { return s - th * s * s + th * th * s * s * s / 3.0; };
          GapMoments gm;
          const double i1 = f1(b) - f1(a);
          gm.gh = th * i1;
          gm.g2h = th * (f2(b) - f2(a));
          gm.gpsih = Vector::Constant(1, i1);
          return gm;
        };
      }
      return r;
    }
    case GWeight::Kind::OptimalAgainst: {
      if (!w.phi) throw ModelError("optimal weight needs an extension score");
      const auto p = static_cast<Eigen::Index>(free.size());
      Vector proj = Vector::Zero(p);
      if (p > 0) {
        if (!sigma_pm_inv) throw ModelError("optimal weight needs Sigma_pm");
        // n^{-1} \int Y phi psi h over the whole range
        Vector mvec = Vector::Zero(p);
        for (std::size_t gi = 0; gi < path.gap_count(); ++gi) {
          const int y = path.gap_risk[gi];
          if (y == 0) continue;
          for (Eigen::Index k = 0; k < p; ++k) {
            const Eigen::Index idx = free[static_cast<std::size_t>(k)];
            mvec[k] += y * quad::integrate_singular(
                               [&](double s) {
                                 const double h = m.hazard(s, theta);
                                 return h == 0.0 ? 0.0 : w.phi(s) * m.score(s, theta)[idx] * h;
                               },
                               path.knots[gi], path.knots[gi + 1], m.breakpoints(), 1e-11);
          }
        }
        mvec /= static_cast<double>(path.n);
        proj = *sigma_pm_inv * mvec;
      }
      r.unit = false;
      auto phi = w.phi;
      const HazardModel* mp = &m;
      r.g = [phi, proj, free, mp, theta](double s) {
        double v = phi(s);
        if (proj.size() == 0) return v;
        const Vector psi = mp->score(s, theta);
        for (std::size_t k = 0; k < free.size(); ++k) v -= psi[free[k]] * proj[static_cast<Eigen::Index>(k)];
        return v;
      };
      return r;
    }
  }
  return r;
}

GapMoments quadrature_moments(const HazardModel& m, const Vector& theta,
                              const std::function<double(double)>& g, double a, double b) {
  GapMoments gm;
  auto h = [&](double s) { return m.hazard(s, theta); };
  const auto br = m.breakpoints();
  gm.gh = quad::integrate_singular([&](double s) { const double v = h(s); return v == 0.0 ? 0.0 : g(s) * v; }, a, b, br, 1e-11);
  gm.g2h = quad::integrate_singular(
      [&](double s) {
        const double v = h(s);
        if (v == 0.0) return 0.0;
        const double gs = g(s);
        return gs * gs * v;
      },
      a, b, br, 1e-11);
  const auto p = static_cast<Eigen::Index>(m.dim());
  gm.gpsih = Vector(p);
  for (Eigen::Index k = 0; k < p; ++k)
    gm.gpsih[k] = quad::integrate_singular(
        [&](double s) {
          const double v = h(s);
          return v == 0.0 ? 0.0 : g(s) * m.score(s, theta)[k] * v;
        },
        a, b, br, 1e-11);
  return gm;
}

Vector restrict(const Vector& v, const std::vector<Eigen::Index>& free) {
  Vector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[free[k]];
  return out;
}

Matrix restrict(const Matrix& m, const std::vector<Eigen::Index>& free) {
  const auto p = static_cast<Eigen::Index>(free.size());
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      out(i, j) = m(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  return out;
}

struct EngineInput {
  const HazardModel* model;
  Vector theta;
  std::vector<Eigen::Index> free;
  Matrix sigma;  // free block of the chosen estimate; empty when p = 0
  Matrix sigma_pm_inv;
  bool have_pm_inv = false;
  PlotType type;
  VarianceFlavor flavor;
  std::optional<WeightWindow> window;
  GWeight weight;
};

NlhCurve run_engine(const EngineInput& in, const SurvivalSample& sample) {
  const HazardModel& m = *in.model;
  const RiskPath path = build_risk_path(sample);
  const double n = static_cast<double>(path.n);
  const double a = in.window ? in.window->a : 0.0;
  const double b = in.window ? in.window->b : std::numeric_limits<double>::infinity();

  if (in.type != PlotType::C && in.weight.kind != GWeight::Kind::Unit)
    throw ModelError("a G weight is only used by Type C plots");
  const ResolvedWeight w = resolve(in.weight, m, in.theta, sample, path, in.free,
                                   in.have_pm_inv ? &in.sigma_pm_inv : nullptr);

  std::vector<Segment> segs;
  for (std::size_t g = 0; g < path.gap_count(); ++g) {
    const double lo = std::max(path.knots[g], a);
    const double hi = std::min(path.knots[g + 1], b);
    if (hi > lo && path.gap_risk[g] > 0) segs.push_back({lo, hi, path.gap_risk[g]});
  }

  const auto p = static_cast<Eigen::Index>(in.free.size());
  Matrix sigma_inv;
  if (p > 0) sigma_inv = spd_inverse(in.sigma, "Sigma");

  NlhCurve out;
  out.model_id = m.id();
  out.theta = in.theta;
  out.type = in.type;
  out.flavor = in.flavor;
  out.window = in.window;
  out.weight = in.type == PlotType::C ? in.weight.label : "";

  double jumps = 0.0, comp = 0.0, lead_pm = 0.0, lead_np = 0.0;
  Vector c_pm = Vector::Zero(p), c_np = Vector::Zero(p);
  std::size_t si = 0;
  for (std::size_t i = 0; i < path.event_times.size(); ++i) {
    const double u = path.event_times[i];
    if (!(u > a) || u > b) continue;
    for (; si < segs.size() && segs[si].hi <= u; ++si) {
      const auto& sg = segs[si];
      const double c = in.type == PlotType::A ? 1.0 : sg.y / n;
      GapMoments gm;
      if (w.unit) {
        gm.gh = gm.g2h = m.cum_hazard(sg.hi, in.theta) - m.cum_hazard(sg.lo, in.theta);
        gm.gpsih = m.cum_score(sg.hi, in.theta) - m.cum_score(sg.lo, in.theta);
      } else if (w.exact) {
        gm = w.exact(sg.lo, sg.hi);
      } else {
        gm = quadrature_moments(m, in.theta, w.g, sg.lo, sg.hi);
      }
      if (w.unit) {
        // interior points of the gap, for suprema over continuous time
        for (int j = 1; j <= kGapSamples; ++j) {
          const double t = sg.lo + (sg.hi - sg.lo) * j / (kGapSamples + 1.0);
          const double dh = m.cum_hazard(t, in.theta) - m.cum_hazard(sg.lo, in.theta);
          const double lead = in.flavor == VarianceFlavor::Parametric ? lead_pm + c * c * (n / sg.y) * dh : lead_np;
          double k2 = lead;
          if (p > 0) {
            Vector cv = c_np;
            if (in.flavor == VarianceFlavor::Parametric)
              cv = c_pm + c * restrict(Vector(m.cum_score(t, in.theta) - m.cum_score(sg.lo, in.theta)), in.free);
            k2 -= cv.dot(sigma_inv * cv);
          }
          const double floor = std::max(1e-8, std::sqrt(64.0 * std::numeric_limits<double>::epsilon())) *
                               std::sqrt(std::max(lead, 0.0));
          const double kappa = std::sqrt(std::max(k2, 0.0));
          out.fine_times.push_back(t);
          out.fine_nlh.push_back(k2 > 0.0 && kappa > floor ? std::sqrt(n) * (jumps - comp - c * dh) / kappa : kNaN);
        }
      }
      comp += c * gm.gh;
      lead_pm += c * c * (n / sg.y) * gm.g2h;
      if (p > 0) c_pm += c * restrict(gm.gpsih, in.free);
    }
    const bool pm = in.flavor == VarianceFlavor::Parametric;
    auto evaluate = [&](double& k2, double& kappa) {
      const double lead = pm ? lead_pm : lead_np;
      k2 = lead;
      if (p > 0) {
        const Vector& cv = pm ? c_pm : c_np;
        k2 -= cv.dot(sigma_inv * cv);
      }
      const double d = std::sqrt(n) * (jumps - comp);
      // 1e-8 sqrt(lead), raised to cover cancellation round-off in lead - C'S^-1 C
      const double floor = std::max(1e-8, std::sqrt(64.0 * std::numeric_limits<double>::epsilon())) *
                           std::sqrt(std::max(lead, 0.0));
      kappa = std::sqrt(std::max(k2, 0.0));
      const bool ok = k2 > 0.0 && kappa > floor && std::isfinite(d);
      return ok ? d / kappa : kNaN;
    };
    // left limit at u, before the jump
    double k2 = 0.0, kappa = 0.0;
    out.nlh_left.push_back(evaluate(k2, kappa));

    const double y = path.at_risk[i];
    const double dn = path.events[i];
    const double k = (in.type == PlotType::A ? 1.0 : y / n) * (w.unit ? 1.0 : w.g(u));
    jumps += k * dn / y;
    lead_np += k * k * n * dn / (y * y);
    if (p > 0) c_np += k * restrict(m.score(u, in.theta), in.free) * dn / y;

    const double value = evaluate(k2, kappa);
    out.times.push_back(u);
    out.d_n.push_back(std::sqrt(n) * (jumps - comp));
    out.kappa2.push_back(k2);
    out.kappa.push_back(kappa);
    out.defined.push_back(!std::isnan(value));
    out.nlh.push_back(value);
  }
  return out;
}

EngineInput prepare(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                    PlotType type, std::optional<VarianceFlavor> flavor, const GWeight& weight,
                    std::optional<WeightWindow> window) {
  EngineInput in;
  in.model = &model;
  in.theta = fit.theta_hat;
  model.check(in.theta);
  in.free = fit.free_indices();
  in.type = type;
  in.flavor = flavor.value_or(default_flavor(model));
  in.window = window;
  in.weight = weight;
  if (in.free.empty()) return in;
  auto pm = [&]() -> Matrix {
    if (fit.sigma_pm.size() > 0) return fit.sigma_pm;
    return sigma_parametric(model, fit.theta_hat, sample, window);
  };
  const Matrix full = in.flavor == VarianceFlavor::Parametric ? pm() : fit.sigma(in.flavor);
  in.sigma = restrict(full, in.free);
  if (type == PlotType::C && weight.kind == GWeight::Kind::OptimalAgainst) {
    in.sigma_pm_inv = spd_inverse(restrict(pm(), in.free), "Sigma_pm");
    in.have_pm_inv = true;
  }
  return in;
}

}  // namespace

std::string to_string(PlotType t) {
  switch (t) {
    case PlotType::A:
      return "A";
    case PlotType::B:
      return "B";
    case PlotType::C:
      return "C";
  }
  return "?";
}

std::string to_string(VarianceFlavor f) {
  return f == VarianceFlavor::Parametric ? "pm" : "np";
}

GWeight GWeight::deterministic(std::function<double(double)> g, std::string label) {
  GWeight w;
  w.kind = Kind::Deterministic;
  w.g = std::move(g);
  w.label = std::move(label);
  return w;
}

GWeight GWeight::log_minus_phi_hat() {
  GWeight w;
  w.kind = Kind::LogMinusPhiHat;
  w.label = "log";
  return w;
}

GWeight GWeight::one_minus_theta_s() {
  GWeight w;
  w.kind = Kind::OneMinusThetaS;
  w.label = "frailty";
  return w;
}

GWeight GWeight::optimal_against(std::function<double(double)> phi, std::string label) {
  GWeight w;
  w.kind = Kind::OptimalAgainst;
  w.phi = std::move(phi);
  w.label = std::move(label);
  return w;
}

double phi_hat(const SurvivalSample& sample) {
  double num = 0.0, den = 0.0;
  for (const auto& s : sample.subjects()) {
    num += xlogx(s.exit_time) - s.exit_time;
    den += s.exit_time;
  }
  if (!(den > 0.0)) throw DataError("phi-hat needs positive exit times");
  return num / den;
}

double NlhCurve::at(double t) const {
  std::size_t prev = times.size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!defined[i]) continue;
    if (times[i] == t) return nlh[i];
    if (times[i] > t) {
      if (prev == times.size()) return kNaN;
      const double w = (t - times[prev]) / (times[i] - times[prev]);
      return (1.0 - w) * nlh[prev] + w * nlh[i];
    }
    prev = i;
  }
  return kNaN;
}

NlhCurve curve_type_a(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      std::optional<VarianceFlavor> flavor) {
  return nlh_curve(model, fit, sample, PlotType::A, flavor);
}

NlhCurve curve_type_b(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      std::optional<VarianceFlavor> flavor) {
  return nlh_curve(model, fit, sample, PlotType::B, flavor);
}

NlhCurve curve_type_c(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                      const GWeight& weight, std::optional<VarianceFlavor> flavor) {
  return nlh_curve(model, fit, sample, PlotType::C, flavor, weight);
}

NlhCurve nlh_curve(const HazardModel& model, const FitResult& fit, const SurvivalSample& sample,
                   PlotType type, std::optional<VarianceFlavor> flavor, const GWeight& weight) {
  return run_engine(prepare(model, fit, sample, type, flavor, weight, std::nullopt), sample);
}

NlhCurve curve_fixed(const HazardModel& model, const SurvivalSample& sample, PlotType type,
                     const GWeight& weight) {
  if (model.dim() != 0) throw ModelError("curve_fixed needs a fully specified model");
  EngineInput in;
  in.model = &model;
  in.theta = Vector(0);
  in.type = type;
  in.flavor = VarianceFlavor::Parametric;
  in.weight = weight;
  return run_engine(in, sample);
}

NlhCurve curve_windowed(const HazardModel& model, const FitResult& window_fit,
                        const SurvivalSample& sample, PlotType type,
                        std::optional<VarianceFlavor> flavor, const GWeight& weight) {
  if (!window_fit.window) throw ModelError("curve_windowed needs a fit_window result");
  return run_engine(
      prepare(model, window_fit, sample, type, flavor, weight, window_fit.window), sample);
}

BandCalibration max_band_exceedance(double b1, double b2, double m) {
  if (!(b1 > 0.0 && b1 < b2 && b2 < 1.0)) throw DataError("band needs 0 < b1 < b2 < 1");
  if (!(m > 0.0)) throw DataError("band threshold must be positive");
  BandCalibration r{b1, b2, m, 0.0, m > 1.0};
  const double c1 = b1 / (1.0 - b1);
  const double c2 = b2 / (1.0 - b2);
  const double f = special::normal_pdf(m);
  r.probability = 4.0 * f / m + f * (m - 1.0 / m) * std::log(c2 / c1);
  return r;
}

double early_exceedance_prob(int k, double threshold) {
  if (k < 1) throw DataError("k must be >= 1");
  if (!(threshold >= 0.0)) throw DataError("threshold must be >= 0");
  const double kd = k;
  const double c = threshold;
  const double root = std::sqrt(c * c + 4.0 * kd);
  // sqrt(k)(1 - x^2)/x = +-c at x = sqrt(V)
  const double x_lo = (-c + root) / (2.0 * std::sqrt(kd));
  const double x_hi = (c + root) / (2.0 * std::sqrt(kd));
  const double dof = 2.0 * kd;
  return special::chi_square_cdf(dof * x_lo * x_lo, dof) +
         special::chi_square_sf(dof * x_hi * x_hi, dof);
}

std::pair<double, double> empirical_band_positions(const RiskPath& path, double b1, double b2) {
  if (!(b1 >= 0.0 && b1 < b2 && b2 <= 1.0)) throw DataError("band needs 0 <= b1 < b2 <= 1");
  double total = 0.0;
  for (std::size_t g = 0; g < path.gap_count(); ++g)
    total += path.gap_risk[g] * (path.knots[g + 1] - path.knots[g]);
  if (!(total > 0.0)) throw DataError("no exposure");
  auto invert = [&](double frac) {
    if (frac <= 0.0) return 0.0;
    const double target = frac * total;
    double acc = 0.0;
    for (std::size_t g = 0; g < path.gap_count(); ++g) {
      const double len = path.knots[g + 1] - path.knots[g];
      const double mass = path.gap_risk[g] * len;
      if (mass > 0.0 && acc + mass >= target)
        return path.knots[g] + (target - acc) / path.gap_risk[g];
      acc += mass;
    }
    return path.knots.back();
  };
  return {invert(b1), invert(b2)};
}

double band_maximum(const NlhCurve& curve, double a1, double a2) {
  double best = kNaN;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.times[i] < a1 || curve.times[i] > a2) continue;
    if (curve.defined[i]) best = std::isnan(best) ? std::abs(curve.nlh[i]) : std::max(best, std::abs(curve.nlh[i]));
    // the left limit at the first point lies before a1 unless a1 is that point
    if (i < curve.nlh_left.size() && !std::isnan(curve.nlh_left[i]) && curve.times[i] > a1)
      best = std::isnan(best) ? std::abs(curve.nlh_left[i]) : std::max(best, std::abs(curve.nlh_left[i]));
  }
  for (std::size_t i = 0; i < curve.fine_times.size(); ++i) {
    if (curve.fine_times[i] < a1 || curve.fine_times[i] > a2 || std::isnan(curve.fine_nlh[i])) continue;
    best = std::isnan(best) ? std::abs(curve.fine_nlh[i]) : std::max(best, std::abs(curve.fine_nlh[i]));
  }
  return best;
}

}  // namespace nlh
