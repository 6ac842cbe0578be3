#include "nlh/power_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "nlh/quadrature.hpp"

namespace nlh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier compensated sum
struct Accumulator {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

// \int_a^b f, split at the exposure knots; b may be infinite.
double integrate(const Fn& f, double a, double b, const std::vector<double>& knots) {
  if (!(b > a)) return 0.0;
  if (!std::isfinite(b)) {
    const double last = knots.empty() ? a : std::max(a, knots.back());
    return integrate(f, a, last, knots) + quad::integrate_to_infinity(f, last, 1e-12);
  }
  double total = 0.0;
  double lo = a;
  for (double k : knots) {
    if (k <= lo) continue;
    if (k >= b) break;
    total += quad::integrate_singular(f, lo, k, 1e-12);
    lo = k;
  }
  return total + quad::integrate_singular(f, lo, b, 1e-12);
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double t) {
  if (x.empty() || t < x.front() || t > x.back()) return kNaN;
  auto it = std::lower_bound(x.begin(), x.end(), t);
  const auto i = static_cast<std::size_t>(it - x.begin());
  if (x[i] == t) return y[i];
  const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

double draw_censoring(const CensoringSpec& c, std::mt19937_64& rng) {
  switch (c.kind) {
    case CensoringSpec::Kind::None:
      return std::numeric_limits<double>::infinity();
    case CensoringSpec::Kind::Exponential:
      return std::exponential_distribution<double>(c.value)(rng);
    case CensoringSpec::Kind::Uniform:
      return std::uniform_real_distribution<double>(0.0, c.value)(rng);
    case CensoringSpec::Kind::Administrative:
      return c.value;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master ^ (index * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SurvivalSample simulate_sample(const DistSpec& dist, const CensoringSpec& censoring,
                               const TruncationSpec& truncation, std::size_t n, std::uint64_t seed) {
  if (!dist.model) throw DataError("simulation needs a model");
  dist.model->check(dist.theta);
  if (dist.frailty_variance < 0.0) throw DataError("frailty variance must be >= 0");
  if (censoring.kind != CensoringSpec::Kind::None && !(censoring.value > 0.0))
    throw DataError("censoring parameter must be positive");
  if (truncation.max_entry < 0.0) throw DataError("maximal entry time must be >= 0");
  if (n == 0) throw DataError("sample size must be positive");

  std::vector<Subject> subjects;
  subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(split_seed(seed, i));
    std::exponential_distribution<double> unit(1.0);
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw DataError("truncation rejects almost every lifetime");
      double e = unit(rng);
      if (dist.frailty_variance > 0.0) {
        const double shape = 1.0 / dist.frailty_variance;
        e /= std::gamma_distribution<double>(shape, dist.frailty_variance)(rng);
      }
      const double t = dist.model->inverse_cum_hazard(e, dist.theta);
      const double c = draw_censoring(censoring, rng);
      const double v = truncation.max_entry > 0.0
                           ? std::uniform_real_distribution<double>(0.0, truncation.max_entry)(rng)
                           : 0.0;
      const double exit = std::min(t, c);
      if (!std::isfinite(exit)) throw DataError("defective lifetime without censoring");
      if (exit <= v) continue;
      Subject s;
      s.exit_time = exit;
      s.status = t <= c ? 1 : 0;
      s.entry_time = v;
      subjects.push_back(s);
      break;
    }
  }
  return SurvivalSample(std::move(subjects));
}

Exposure Exposure::from_sample(const SurvivalSample& sample) {
  auto path = std::make_shared<RiskPath>(build_risk_path(sample));
  Exposure e;
  const double n = static_cast<double>(sample.n());
  e.y = [path, n](double s) { return path->risk_at(s) / n; };
  e.tau = path->tau;
  e.knots = path->knots;
  return e;
}

Exposure Exposure::survivor(const HazardModel& model, const Vector& theta) {
  Exposure e;
  const HazardModel* m = &model;
  e.y = [m, theta](double s) { return std::exp(-m->cum_hazard(s, theta)); };
  e.tau = std::numeric_limits<double>::infinity();
  return e;
}

Vector least_false_theta(const HazardModel& model, const Fn& true_hazard, const Exposure& ex) {
  const auto& y = ex.y;
  if (model.id() == "exponential") {
    const double num = integrate([&](double s) { return y(s) * true_hazard(s); }, 0.0, ex.tau, ex.knots);
    const double den = integrate(y, 0.0, ex.tau, ex.knots);
    return Vector::Constant(1, num / den);
  }
  const auto p = static_cast<Eigen::Index>(model.dim());
  auto objective = [&](const Vector& th) {
    return integrate(
        [&](double s) {
          const double hm = model.hazard(s, th);
          const double ht = true_hazard(s);
          const double lg = ht > 0.0 ? ht * std::log(hm) : 0.0;
          return y(s) * (lg - hm);
        },
        0.0, ex.tau, ex.knots);
  };
  auto gradient = [&](const Vector& eta) {
    const Vector th = model.from_free(eta);
    const Vector jac = model.free_jacobian(eta);
    Vector g(p);
    for (Eigen::Index k = 0; k < p; ++k)
      g[k] = integrate(
          [&](double s) {
            const double hm = model.hazard(s, th);
            if (hm == 0.0) return 0.0;
            return y(s) * (true_hazard(s) - hm) * model.score(s, th)[k];
          },
          0.0, ex.tau, ex.knots);
    return Vector(g.cwiseProduct(jac));
  };
  // start from the exposure-weighted constant fit on the scale parameter
  Vector th = model.from_free(Vector::Zero(p));
  const auto tr = model.transforms();
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (tr[i].kind != ParamTransform::Kind::Log && tr[i].admits(0.0)) th[static_cast<Eigen::Index>(i)] = 0.0;
  Vector eta = model.to_free(th);
  double value = objective(th);
  for (int it = 0; it < 100; ++it) {
    const Vector g = gradient(eta);
    if (g.cwiseAbs().maxCoeff() < 1e-10) break;
    Matrix hess(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(eta[k]));
      Vector up = eta, dn = eta;
      up[k] += h;
      dn[k] -= h;
      hess.col(k) = (gradient(up) - gradient(dn)) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
    Vector step;
    if (eig.eigenvalues().maxCoeff() < 0.0)
      step = -hess.ldlt().solve(g);
    else
      step = g / std::max(1.0, g.norm());
    double scale = 1.0;
    bool moved = false;
    for (int halve = 0; halve < 40; ++halve, scale *= 0.5) {
      const Vector next = eta + scale * step;
      const Vector cand = model.from_free(next);
      if (!model.admissible(cand)) continue;
      const double v = objective(cand);
      if (std::isfinite(v) && v >= value) {
        eta = next;
        value = v;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return model.from_free(eta);
}

std::vector<double> drift_curve(const HazardModel& model, const Vector& theta0, const Fn& true_hazard,
                                const Fn& k, std::span<const double> times) {
  std::vector<double> out;
  double acc = 0.0, last = 0.0;
  for (double t : times) {
    if (t < last) throw DataError("drift times must be increasing");
    acc += integrate([&](double s) { return k(s) * (true_hazard(s) - model.hazard(s, theta0)); }, last, t, {});
    last = t;
    out.push_back(acc);
  }
  return out;
}

LocalShift local_mean_shift(const HazardModel& model, const Vector& theta, const Fn& phi, double delta,
                            const Fn& k, const Exposure& ex, std::span<const double> times) {
  const auto p = static_cast<Eigen::Index>(model.dim());
  auto h = [&](double s) { return model.hazard(s, theta); };
  Matrix sigma(p, p);
  Vector m(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    m[i] = integrate([&](double s) { return ex.y(s) * phi(s) * h(s) * model.score(s, theta)[i]; }, 0.0, ex.tau,
                     ex.knots);
    for (Eigen::Index j = 0; j <= i; ++j)
      sigma(i, j) = sigma(j, i) = integrate(
          [&](double s) {
            const Vector psi = model.score(s, theta);
            return ex.y(s) * psi[i] * psi[j] * h(s);
          },
          0.0, ex.tau, ex.knots);
  }
  const Matrix sinv = p > 0 ? spd_inverse(sigma, "Sigma") : Matrix();
  LocalShift out;
  double a1 = 0.0, lead = 0.0, last = 0.0;
  Vector c = Vector::Zero(p);
  for (double t : times) {
    if (t < last) throw DataError("times must be increasing");
    a1 += integrate([&](double s) { return k(s) * h(s) * phi(s); }, last, t, ex.knots);
    lead += integrate([&](double s) { const double w = k(s); return w * w * h(s) / ex.y(s); }, last, t, ex.knots);
    for (Eigen::Index i = 0; i < p; ++i)
      c[i] += integrate([&](double s) { return k(s) * h(s) * model.score(s, theta)[i]; }, last, t, ex.knots);
    last = t;
    const double a = p > 0 ? a1 - c.dot(sinv * m) : a1;
    const double k2 = p > 0 ? lead - c.dot(sinv * c) : lead;
    const double kappa = std::sqrt(std::max(k2, 0.0));
    out.times.push_back(t);
    out.a.push_back(a);
    out.kappa.push_back(kappa);
    out.mean.push_back(kappa > 0.0 ? delta * a / kappa : kNaN);
  }
  return out;
}

double frailty_power_prediction(double theta, double sigma2, double n, double t) {
  if (!(theta > 0.0) || sigma2 < 0.0 || !(n > 0.0) || !(t > 0.0))
    throw DataError("frailty prediction needs theta, n, t > 0 and sigma2 >= 0");
  const double x = theta * t;
  return std::sqrt(n) * sigma2 * x * std::exp(-0.5 * x) / std::sqrt(-std::expm1(-x));
}

PowerPrediction predict_power(const AlternativeSpec& alternative, const HazardModel& model,
                              const Vector& theta, PlotType type, const Exposure& exposure, double n,
                              std::span<const double> times) {
  if (type == PlotType::C) throw ModelError("power predictions cover Types A and B");
  PowerPrediction out;
  out.times.assign(times.begin(), times.end());
  const Fn y = exposure.y;
  const Fn k = type == PlotType::A ? Fn([](double) { return 1.0; }) : y;
  if (const auto* fixed = std::get_if<FixedHazard>(&alternative)) {
    out.theta0 = least_false_theta(model, fixed->h, exposure);
    out.drift = drift_curve(model, out.theta0, fixed->h, k, times);
    // sqrt(n) pi / kappa0, kappa0 from the model at theta0
    auto ls = local_mean_shift(model, out.theta0, [](double) { return 0.0; }, 0.0, k, exposure, times);
    for (std::size_t i = 0; i < times.size(); ++i)
      out.mean.push_back(ls.kappa[i] > 0.0 ? std::sqrt(n) * out.drift[i] / ls.kappa[i] : kNaN);
    out.note = "fixed alternative: least false parameter and drift";
  } else if (const auto* local = std::get_if<LocalAlternative>(&alternative)) {
    out.mean = local_mean_shift(model, theta, local->phi, local->delta, k, exposure, times).mean;
    out.note = "local alternative";
  } else {
    const auto& fr = std::get<FrailtyContamination>(alternative);
    if (model.id() != "exponential") throw ModelError("frailty contamination is defined against the exponential model");
    const double th = fr.theta;
    out.mean = local_mean_shift(model, Vector::Constant(1, th), [th](double s) { return -th * s; },
                                std::sqrt(n) * fr.sigma2, k, exposure, times)
                   .mean;
    out.note = "frailty contamination, small sigma^2; closed form assumes no censoring and the full half line";
  }
  return out;
}

const SeriesSummary& McSummary::get(PlotType type, VarianceFlavor flavor) const {
  for (const auto& s : series)
    if (s.type == type && s.flavor == flavor) return s;
  throw std::out_of_range("no such series in the Monte Carlo summary");
}

namespace {

struct SeriesDraw {
  std::vector<double> probe;
  double band_max = kNaN;
  std::vector<double> grid_nlh;
  std::vector<double> grid_drift;
};

struct ReplicationDraw {
  bool failed = false;
  std::vector<SeriesDraw> series;
};

ReplicationDraw replicate(const Scenario& sc, std::uint64_t seed) {
  ReplicationDraw out;
  try {
    const SurvivalSample sample = simulate_sample(sc.truth, sc.censoring, sc.truncation, sc.n, seed);
    const ModelPtr model = make_model(sc.model, sample);
    FitOptions opt;
    opt.parametric_sigma =
        std::find(sc.flavors.begin(), sc.flavors.end(), VarianceFlavor::Parametric) != sc.flavors.end();
    const FitResult fit = fit_ml(*model, sample, opt);
    const RiskPath path = build_risk_path(sample);
    std::vector<double> events;
    for (std::size_t i = 0; i < path.event_times.size(); ++i)
      events.insert(events.end(), static_cast<std::size_t>(path.events[i]), path.event_times[i]);
    const auto [a1, a2] = empirical_band_positions(path, sc.b1, sc.b2);
    const double rootn = std::sqrt(static_cast<double>(sc.n));
    for (auto type : sc.types)
      for (auto flavor : sc.flavors) {
        const NlhCurve c = nlh_curve(*model, fit, sample, type, flavor);
        SeriesDraw d;
        for (const auto& pr : sc.probes) {
          double v = kNaN;
          if (pr.kind == Probe::Kind::Time) {
            v = c.at(pr.value);
          } else {
            const std::size_t k = pr.kind == Probe::Kind::MedianEvent
                                      ? (events.size() - 1) / 2
                                      : static_cast<std::size_t>(pr.value) - 1;
            if (k < events.size()) {
              auto it = std::lower_bound(c.times.begin(), c.times.end(), events[k]);
              const auto idx = static_cast<std::size_t>(it - c.times.begin());
              if (idx < c.size() && c.defined[idx]) v = c.nlh[idx];
            }
          }
          d.probe.push_back(v);
        }
        d.band_max = band_maximum(c, a1, a2);
        for (double g : sc.grid) {
          d.grid_nlh.push_back(c.at(g));
          d.grid_drift.push_back(interpolate(c.times, c.d_n, g) / rootn);
        }
        out.series.push_back(std::move(d));
      }
  } catch (const std::exception&) {
    out.failed = true;
    out.series.clear();
  }
  return out;
}

}  // namespace

McSummary mc_study(const Scenario& sc, std::size_t reps, std::uint64_t seed, ExecutionPolicy policy) {
  if (reps == 0) throw DataError("need at least one replication");
  if (sc.types.empty() || sc.flavors.empty()) throw DataError("scenario needs plot types and flavors");
  std::vector<ReplicationDraw> draws(reps);
  const auto count = static_cast<long long>(reps);
  if (policy == ExecutionPolicy::OpenMP) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long r = 0; r < count; ++r)
      draws[static_cast<std::size_t>(r)] = replicate(sc, split_seed(seed, static_cast<std::uint64_t>(r)));
  } else {
    for (long long r = 0; r < count; ++r)
      draws[static_cast<std::size_t>(r)] = replicate(sc, split_seed(seed, static_cast<std::uint64_t>(r)));
  }

  McSummary out;
  out.replications = reps;
  out.seed = seed;
  std::size_t s = 0;
  for (auto type : sc.types)
    for (auto flavor : sc.flavors) {
      SeriesSummary ss;
      ss.type = type;
      ss.flavor = flavor;
      const std::size_t np = sc.probes.size(), ng = sc.grid.size(), nb = sc.band_thresholds.size();
      std::vector<Accumulator> exceed(np), sum(np), sum2(np), gsum(ng), gsum2(ng), dsum(ng), band(nb);
      ss.probe_count.assign(np, 0);
      ss.grid_count.assign(ng, 0);
      for (const auto& d : draws) {
        if (d.failed) continue;
        const SeriesDraw& sd = d.series[s];
        for (std::size_t i = 0; i < np; ++i) {
          const double v = sd.probe[i];
          if (std::isnan(v)) continue;
          ++ss.probe_count[i];
          exceed[i].add(std::abs(v) > sc.level ? 1.0 : 0.0);
          sum[i].add(v);
          sum2[i].add(v * v);
        }
        if (!std::isnan(sd.band_max)) {
          ++ss.band_count;
          for (std::size_t i = 0; i < nb; ++i) band[i].add(sd.band_max > sc.band_thresholds[i] ? 1.0 : 0.0);
        }
        for (std::size_t i = 0; i < ng; ++i) {
          const double v = sd.grid_nlh[i];
          if (std::isnan(v)) continue;
          ++ss.grid_count[i];
          gsum[i].add(v);
          gsum2[i].add(v * v);
          dsum[i].add(sd.grid_drift[i]);
        }
      }
      auto moments = [](const Accumulator& a, const Accumulator& b, std::size_t k, double& mean, double& se) {
        if (k == 0) {
          mean = se = kNaN;
          return;
        }
        const double kk = static_cast<double>(k);
        mean = a.value() / kk;
        const double var = k > 1 ? std::max(0.0, (b.value() - kk * mean * mean) / (kk - 1.0)) : kNaN;
        se = std::sqrt(var / kk);
      };
      for (std::size_t i = 0; i < np; ++i) {
        double m, e;
        moments(sum[i], sum2[i], ss.probe_count[i], m, e);
        ss.probe_mean.push_back(m);
        ss.probe_se.push_back(e);
        ss.probe_exceedance.push_back(ss.probe_count[i] ? exceed[i].value() / static_cast<double>(ss.probe_count[i]) : kNaN);
      }
      for (std::size_t i = 0; i < nb; ++i)
        ss.band_exceedance.push_back(ss.band_count ? band[i].value() / static_cast<double>(ss.band_count) : kNaN);
      for (std::size_t i = 0; i < ng; ++i) {
        double m, e;
        moments(gsum[i], gsum2[i], ss.grid_count[i], m, e);
        ss.grid_mean.push_back(m);
        ss.grid_se.push_back(e);
        ss.grid_drift.push_back(ss.grid_count[i] ? dsum[i].value() / static_cast<double>(ss.grid_count[i]) : kNaN);
      }
      out.series.push_back(std::move(ss));
      ++s;
    }
  for (const auto& d : draws) out.failures += d.failed ? 1 : 0;
  return out;
}

}  // namespace nlh
