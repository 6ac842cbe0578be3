#include "nlh/ml_fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <boost/math/tools/minima.hpp>

#include "nlh/quadrature.hpp"

namespace nlh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDivergence = 40.0;

struct Bounds {
  double a = 0.0;
  double b = kInf;
};

Bounds bounds_of(std::optional<WeightWindow> w) {
  if (!w) return {};
  return {w->a, w->b};
}

void check_window(const WeightWindow& w) {
  if (!(w.a >= 0.0) || !(w.b > w.a)) throw ModelError("window must satisfy 0 <= a < b");
}

// Exposure interval of subject j inside the window; empty when hi <= lo.
std::pair<double, double> exposure(const Subject& s, Bounds w) {
  return {std::max(s.entry_time, w.a), std::min(s.exit_time, w.b)};
}

bool event_inside(const Subject& s, Bounds w) {
  return s.status == 1 && s.exit_time > w.a && s.exit_time <= w.b &&
         s.exit_time > s.entry_time;
}

struct Counts {
  double events = 0.0;
  double exposure = 0.0;
  std::size_t distinct_event_times = 0;
};

Counts count(const SurvivalSample& sample, Bounds w) {
  Counts c;
  std::set<double> times;
  for (const auto& s : sample.subjects()) {
    const auto [lo, hi] = exposure(s, w);
    if (hi > lo) c.exposure += hi - lo;
    if (event_inside(s, w)) {
      c.events += 1.0;
      times.insert(s.exit_time);
    }
  }
  c.distinct_event_times = times.size();
  return c;
}

// Sum over subjects of H(hi) - H(lo).
double expected_events(const HazardModel& m, const Vector& theta, const SurvivalSample& sample,
                       Bounds w) {
  double total = 0.0;
  for (const auto& s : sample.subjects()) {
    const auto [lo, hi] = exposure(s, w);
    if (hi > lo) total += m.cum_hazard(hi, theta) - m.cum_hazard(lo, theta);
  }
  return total;
}

// Objective on the unconstrained scale of the free coordinates.
class Objective {
 public:
  Objective(const HazardModel& m, const SurvivalSample& s, std::optional<WeightWindow> w,
            Vector base, std::vector<Eigen::Index> free)
      : m_(m), s_(s), w_(w), base_(std::move(base)), free_(std::move(free)),
        transforms_(m.transforms()) {}

  Vector theta(const Vector& eta) const {
    Vector th = base_;
    for (std::size_t k = 0; k < free_.size(); ++k)
      th[free_[k]] = transforms_[static_cast<std::size_t>(free_[k])].from_free(eta[static_cast<Eigen::Index>(k)]);
    return th;
  }

  Vector eta(const Vector& theta) const {
    Vector e(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t k = 0; k < free_.size(); ++k)
      e[static_cast<Eigen::Index>(k)] = transforms_[static_cast<std::size_t>(free_[k])].to_free(theta[free_[k]]);
    return e;
  }

  double value(const Vector& eta) const {
    try {
      const Vector th = theta(eta);
      if (!m_.admissible(th)) return -kInf;
      const double v = log_likelihood(m_, th, s_, w_);
      return std::isnan(v) ? -kInf : v;
    } catch (const std::exception&) {
      return -kInf;
    }
  }

  Vector gradient(const Vector& eta) const {
    const Vector th = theta(eta);
    const Vector g = likelihood_score(m_, th, s_, w_);
    Vector out(eta.size());
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      out[i] = g[free_[k]] * transforms_[static_cast<std::size_t>(free_[k])].derivative(eta[i]);
    }
    return out;
  }

  // Finite differences of the analytic gradient.
  Matrix hessian(const Vector& eta) const {
    const Eigen::Index p = eta.size();
    Matrix h(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      const double step = 1e-5 * std::max(1.0, std::abs(eta[k]));
      Vector up = eta, dn = eta;
      up[k] += step;
      dn[k] -= step;
      h.col(k) = (gradient(up) - gradient(dn)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
  }

 private:
  const HazardModel& m_;
  const SurvivalSample& s_;
  std::optional<WeightWindow> w_;
  Vector base_;
  std::vector<Eigen::Index> free_;
  std::vector<ParamTransform> transforms_;
};

double relative_gradient(const Vector& g, const Vector& eta, double loglik) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(g[i]) * std::max(std::abs(eta[i]), 1.0));
  return worst / std::max(std::abs(loglik), 1.0);
}

// Rescales one coordinate so expected events match the observed count.
void calibrate_scale(const HazardModel& m, Vector& theta, Eigen::Index index,
                     const SurvivalSample& sample, Bounds w, double events) {
  const auto tr = m.transforms()[static_cast<std::size_t>(index)];
  if (tr.kind != ParamTransform::Kind::Log) return;
  auto excess = [&](double log_scale) {
    Vector th = theta;
    th[index] = std::exp(log_scale);
    try {
      return expected_events(m, th, sample, w) - events;
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  double lo = -30.0, hi = 30.0;
  const double flo = excess(lo), fhi = excess(hi);
  if (!(flo < 0.0 && fhi > 0.0)) return;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = excess(mid);
    if (std::isnan(f)) return;
    (f < 0.0 ? lo : hi) = mid;
  }
  theta[index] = std::exp(0.5 * (lo + hi));
}

Vector initial_theta(const HazardModel& m, const SurvivalSample& sample, Bounds w,
                     const Counts& c) {
  const auto tr = m.transforms();
  Vector th(static_cast<Eigen::Index>(tr.size()));
  for (std::size_t i = 0; i < tr.size(); ++i) {
    // zero where admissible (Gompertz and frailty beta, delayed-power k), else from_free(0)
    const bool zero_ok = i > 0 && tr[i].kind != ParamTransform::Kind::Log && tr[i].admits(0.0);
    th[static_cast<Eigen::Index>(i)] = zero_ok ? 0.0 : tr[i].from_free(0.0);
  }
  Eigen::Index scale_index = 0;
  if (m.id() == "gamma") {
    // moment matching on uncensored durations
    double s1 = 0.0, s2 = 0.0, k = 0.0;
    for (const auto& s : sample.subjects())
      if (event_inside(s, w)) {
        s1 += s.exit_time;
        s2 += s.exit_time * s.exit_time;
        k += 1.0;
      }
    const double mean = k > 0 ? s1 / k : 1.0;
    const double var = k > 1 ? (s2 - k * mean * mean) / (k - 1.0) : 0.0;
    if (var > 0.0) {
      th[0] = std::clamp(mean * mean / var, 0.05, 50.0);
      th[1] = th[0] / mean;
    } else {
      th[0] = 1.0;
      th[1] = c.exposure > 0 ? c.events / c.exposure : 1.0;
    }
    scale_index = 1;
  }
  calibrate_scale(m, th, scale_index, sample, w, c.events);
  return th;
}

Matrix free_block(const Matrix& m, const std::vector<Eigen::Index>& free) {
  const auto p = static_cast<Eigen::Index>(free.size());
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) out(i, j) = m(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  return out;
}

// Sigma estimates, covariance and standard errors for a located optimum.
void finish(FitResult& r, const HazardModel& m, const SurvivalSample& sample,
            const FitOptions& options) {
  r.sigma_np = sigma_nonparametric(m, r.theta_hat, sample, r.window);
  r.cov_flavor = default_flavor(m);
  if (m.closed_form_info() || options.parametric_sigma || r.window ||
      r.cov_flavor == VarianceFlavor::Parametric)
    r.sigma_pm = sigma_parametric(m, r.theta_hat, sample, r.window);
  const auto p = static_cast<Eigen::Index>(m.dim());
  r.cov = Matrix::Zero(p, p);
  r.std_errors = Vector::Zero(p);
  const auto free = r.free_indices();
  if (free.empty()) return;
  Matrix inv;
  try {
    inv = spd_inverse(free_block(r.sigma(r.cov_flavor), free), "Sigma");
  } catch (const ModelError&) {
    if (r.converged) throw;
    r.message += (r.message.empty() ? "" : "; ") + std::string("Sigma singular");
    return;
  }
  const double n = static_cast<double>(sample.n());
  for (std::size_t i = 0; i < free.size(); ++i)
    for (std::size_t j = 0; j < free.size(); ++j)
      r.cov(free[i], free[j]) = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / n;
  r.std_errors = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::vector<bool> normalized_mask(const HazardModel& m, const FitOptions& o) {
  std::vector<bool> mask(m.dim(), false);
  if (o.fixed.empty()) return mask;
  if (o.fixed.size() != m.dim()) throw ModelError("fixed mask length does not match the model");
  if (!o.init && std::find(o.fixed.begin(), o.fixed.end(), true) != o.fixed.end())
    throw ModelError("fixed parameters need an init value");
  return o.fixed;
}

FitResult fit_impl(const HazardModel& m, const SurvivalSample& sample, const FitOptions& options,
                   std::optional<WeightWindow> window) {
  const Bounds w = bounds_of(window);
  const Counts c = count(sample, w);
  if (c.events < 1.0) throw ModelError("degenerate fit: no events");

  FitResult r;
  r.model_id = m.id();
  r.window = window;
  r.fixed = normalized_mask(m, options);
  const auto free = r.free_indices();

  if (options.init) {
    if (options.init->size() != static_cast<Eigen::Index>(m.dim()))
      throw ModelError("init has the wrong length");
    m.check(*options.init);
  }

  if (free.size() >= 2 && c.distinct_event_times < 2)
    throw ModelError("degenerate fit: fewer than two distinct event times");

  if (m.id() == "exponential" && free.size() == 1) {
    r.theta_hat = Vector::Constant(1, c.events / c.exposure);
    r.loglik = log_likelihood(m, r.theta_hat, sample, window);
    r.converged = true;
    finish(r, m, sample, options);
    return r;
  }

  Vector start = options.init ? *options.init : initial_theta(m, sample, w, c);
  Objective obj(m, sample, window, start, free);
  Vector eta = obj.eta(start);
  double value = obj.value(eta);
  if (!std::isfinite(value)) throw ModelError("log-likelihood not finite at the starting point");

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    const Vector g = obj.gradient(eta);
    r.grad_norm = relative_gradient(g, eta, value);
    if (!std::isfinite(r.grad_norm)) {
      r.message = "gradient not finite";
      break;
    }
    if (r.grad_norm < options.tolerance) {
      r.converged = true;
      break;
    }
    const Matrix neg_h = -obj.hessian(eta);
    Eigen::SelfAdjointEigenSolver<Matrix> es(neg_h);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Matrix a = neg_h;
    if (es.eigenvalues().minCoeff() <= 1e-10 * top)
      a += (std::abs(es.eigenvalues().minCoeff()) + 1e-6 * top) * Matrix::Identity(g.size(), g.size());
    const Vector step = a.ldlt().solve(g);

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      const Vector cand = eta + t * step;
      const double v = obj.value(cand);
      if (v >= value) {
        eta = cand;
        value = v;
        accepted = true;
        break;
      }
    }
    if (eta.cwiseAbs().maxCoeff() > kDivergence)
      throw ModelError("degenerate fit: parameters diverge (likelihood unbounded)");
    if (!accepted) {
      const Vector g2 = obj.gradient(eta);
      r.grad_norm = relative_gradient(g2, eta, value);
      r.converged = r.grad_norm < 1e3 * options.tolerance;
      if (!r.converged) r.message = "line search failed";
      break;
    }
  }
  if (!r.converged && r.message.empty()) r.message = "iteration limit reached";

  r.theta_hat = obj.theta(eta);
  r.loglik = value;
  finish(r, m, sample, options);
  return r;
}

}  // namespace

std::vector<Eigen::Index> FitResult::free_indices() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < theta_hat.size() || i < static_cast<Eigen::Index>(fixed.size()); ++i)
    if (static_cast<std::size_t>(i) >= fixed.size() || !fixed[static_cast<std::size_t>(i)])
      out.push_back(i);
  return out;
}

const Matrix& FitResult::sigma(VarianceFlavor flavor) const {
  const Matrix& s = flavor == VarianceFlavor::Parametric ? sigma_pm : sigma_np;
  if (s.size() == 0 && theta_hat.size() > 0)
    throw ModelError("requested Sigma estimate was not computed");
  return s;
}

VarianceFlavor default_flavor(const HazardModel& model) {
  return model.closed_form_info() ? VarianceFlavor::Parametric : VarianceFlavor::Nonparametric;
}

double log_likelihood(const HazardModel& model, const Vector& theta, const SurvivalSample& sample,
                      std::optional<WeightWindow> window) {
  model.check(theta);
  if (window) check_window(*window);
  const Bounds w = bounds_of(window);
  double ll = 0.0;
  for (const auto& s : sample.subjects()) {
    if (event_inside(s, w)) ll += std::log(model.hazard(s.exit_time, theta));
    const auto [lo, hi] = exposure(s, w);
    if (hi > lo) ll -= model.cum_hazard(hi, theta) - model.cum_hazard(lo, theta);
  }
  return ll;
}

Vector likelihood_score(const HazardModel& model, const Vector& theta,
                        const SurvivalSample& sample, std::optional<WeightWindow> window) {
  const Bounds w = bounds_of(window);
  Vector g = Vector::Zero(theta.size());
  for (const auto& s : sample.subjects()) {
    if (event_inside(s, w)) g += model.score(s.exit_time, theta);
    const auto [lo, hi] = exposure(s, w);
    if (hi > lo) g -= model.cum_score(hi, theta) - model.cum_score(lo, theta);
  }
  return g;
}

FitResult fit_ml(const HazardModel& model, const SurvivalSample& sample,
                 const FitOptions& options) {
  return fit_impl(model, sample, options, std::nullopt);
}

FitResult fit_window(const HazardModel& model, const SurvivalSample& sample, WeightWindow window,
                     const FitOptions& options) {
  check_window(window);
  return fit_impl(model, sample, options, window);
}

FitResult fit_profile(const HazardModel& model, const SurvivalSample& sample,
                      const FitOptions& options) {
  if (!model.proportional() || model.dim() != 2)
    throw ModelError("profile fit needs a theta * h0(s, beta) model with scalar beta");
  const auto mask = normalized_mask(model, options);
  if (mask[0]) return fit_ml(model, sample, options);

  const Bounds w;
  const Counts c = count(sample, w);
  if (c.events < 1.0) throw ModelError("degenerate fit: no events");
  const auto tr = model.transforms()[1];

  auto theta_of = [&](double beta) {
    Vector th(2);
    th << 1.0, beta;
    th[0] = c.events / expected_events(model, th, sample, w);
    return th;
  };
  auto profile = [&](double eta) {
    try {
      const double beta = tr.from_free(eta);
      Vector th = theta_of(beta);
      if (!model.admissible(th)) return kInf;
      const double v = log_likelihood(model, th, sample);
      return std::isfinite(v) ? -v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };

  FitResult r;
  r.model_id = model.id();
  r.fixed = mask;
  if (mask[1]) {
    model.check(*options.init);
    r.theta_hat = theta_of((*options.init)[1]);
    r.loglik = log_likelihood(model, r.theta_hat, sample);
    r.converged = true;
    finish(r, model, sample, options);
    return r;
  }
  if (c.distinct_event_times < 2)
    throw ModelError("degenerate fit: fewer than two distinct event times");

  double eta0 = tr.to_free(options.init ? (*options.init)[1] : initial_theta(model, sample, w, c)[1]);
  double step = tr.kind == ParamTransform::Kind::Identity ? 0.5 / sample.max_exit_time() : 0.5;

  // Bracket the minimum of the negative profile.
  double f0 = profile(eta0);
  if (!std::isfinite(f0)) throw ModelError("profile likelihood not finite at the start");
  double lo, hi;
  if (profile(eta0 + step) > f0) step = -step;
  if (profile(eta0 + step) > f0) {
    lo = eta0 - std::abs(step);
    hi = eta0 + std::abs(step);
  } else {
    double prev = eta0, cur = eta0 + step, fcur = profile(cur);
    for (;;) {
      step *= 2.0;
      const double next = cur + step;
      if (std::abs(next) > kDivergence)
        throw ModelError("degenerate fit: profile likelihood is monotone");
      const double fnext = profile(next);
      if (fnext >= fcur) {
        lo = std::min(prev, next);
        hi = std::max(prev, next);
        break;
      }
      prev = cur;
      cur = next;
      fcur = fnext;
    }
  }
  std::uintmax_t iters = 200;
  auto best = boost::math::tools::brent_find_minima(profile, lo, hi,
                                                    std::numeric_limits<double>::digits / 2, iters);
  double eta = best.first;

  // Polish: the profile derivative equals the beta score (envelope), so a few secant steps suffice.
  auto dprofile = [&](double e) {
    const Vector th = theta_of(tr.from_free(e));
    return likelihood_score(model, th, sample)[1] * tr.derivative(e);
  };
  for (int k = 0; k < 5; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(eta));
    const double d = dprofile(eta);
    const double dd = (dprofile(eta + h) - dprofile(eta - h)) / (2 * h);
    if (!(dd < 0.0)) break;
    const double next = eta - d / dd;
    if (!(profile(next) <= profile(eta))) break;
    eta = next;
  }

  r.theta_hat = theta_of(tr.from_free(eta));
  r.loglik = log_likelihood(model, r.theta_hat, sample);
  r.iterations = static_cast<int>(iters);
  const Vector g = likelihood_score(model, r.theta_hat, sample);
  Vector e(2);
  e << model.transforms()[0].to_free(r.theta_hat[0]), eta;
  Vector ge(2);
  ge << g[0] * model.transforms()[0].derivative(e[0]), g[1] * tr.derivative(eta);
  r.grad_norm = relative_gradient(ge, e, r.loglik);
  r.converged = r.grad_norm < 1e3 * options.tolerance;
  if (!r.converged) r.message = "profile search did not reach the gradient tolerance";
  finish(r, model, sample, options);
  return r;
}

Matrix info_between(const HazardModel& model, const Vector& theta, double a, double b) {
  const auto p = static_cast<Eigen::Index>(model.dim());
  if (!(b > a)) return Matrix::Zero(p, p);
  if (model.closed_form_info()) return model.info_integral(b, theta) - model.info_integral(a, theta);
  Matrix m(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i; j < p; ++j) {
      m(i, j) = quad::integrate_singular(
          [&](double s) {
            const double h = model.hazard(s, theta);
            if (h == 0.0) return 0.0;
            const Vector psi = model.score(s, theta);
            return psi[i] * psi[j] * h;
          },
          a, b, model.breakpoints(), 1e-11);
      m(j, i) = m(i, j);
    }
  return m;
}

Matrix sigma_parametric(const HazardModel& model, const Vector& theta, const SurvivalSample& sample,
                        std::optional<WeightWindow> window) {
  model.check(theta);
  const Bounds w = bounds_of(window);
  // Net at-risk count between consecutive boundaries.
  std::map<double, long> delta;
  for (const auto& s : sample.subjects()) {
    const auto [lo, hi] = exposure(s, w);
    if (hi > lo) {
      delta[lo] += 1;
      delta[hi] -= 1;
    }
  }
  const auto p = static_cast<Eigen::Index>(model.dim());
  Matrix total = Matrix::Zero(p, p);
  long at_risk = 0;
  for (auto it = delta.begin(); it != delta.end(); ++it) {
    at_risk += it->second;
    auto next = std::next(it);
    if (next == delta.end() || at_risk == 0) continue;
    total += static_cast<double>(at_risk) * info_between(model, theta, it->first, next->first);
  }
  return total / static_cast<double>(sample.n());
}

Matrix sigma_nonparametric(const HazardModel& model, const Vector& theta,
                           const SurvivalSample& sample, std::optional<WeightWindow> window) {
  model.check(theta);
  const Bounds w = bounds_of(window);
  const auto p = static_cast<Eigen::Index>(model.dim());
  Matrix total = Matrix::Zero(p, p);
  for (const auto& s : sample.subjects())
    if (event_inside(s, w)) {
      const Vector psi = model.score(s.exit_time, theta);
      total += psi * psi.transpose();
    }
  return total / static_cast<double>(sample.n());
}

Matrix spd_inverse(const Matrix& m, const std::string& what) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(ev.minCoeff() > 1e-12 * top) || !std::isfinite(top))
    throw ModelError(what + " is singular or not positive definite");
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace nlh
