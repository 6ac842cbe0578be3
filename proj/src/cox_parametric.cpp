#include "nlh/cox_parametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nlh {

namespace {

double horizon(const SurvivalSample& s) { return s.tau() > 0.0 ? s.tau() : s.max_exit_time(); }

double exposure(const Subject& sub, double tau) {
  return std::max(0.0, std::min(sub.exit_time, tau) - sub.entry_time);
}

bool counts(const Subject& sub, double tau) { return sub.status == 1 && sub.exit_time <= tau; }

Vector covariates(const Subject& sub, std::size_t dim) {
  Vector z = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim && k < sub.covariates.size(); ++k)
    z[static_cast<Eigen::Index>(k)] = sub.covariates[k];
  return z;
}

void check_beta(const SurvivalSample& sample, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != sample.covariate_dim())
    throw ModelError("beta has " + std::to_string(beta.size()) + " entries, sample has " +
                     std::to_string(sample.covariate_dim()) + " covariates");
}

Matrix sigma_blocks(const SurvivalSample& sample, double theta, const Vector& beta) {
  const std::size_t q = sample.covariate_dim();
  const double tau = horizon(sample);
  const auto dim = static_cast<Eigen::Index>(q + 1);
  Matrix sig = Matrix::Zero(dim, dim);
  for (const auto& sub : sample.subjects()) {
    const Vector z = covariates(sub, q);
    const double et = std::exp(beta.dot(z)) * exposure(sub, tau);
    sig(0, 0) += et / theta;
    if (q == 0) continue;
    sig.block(1, 0, dim - 1, 1) += z * et;
    sig.block(1, 1, dim - 1, dim - 1) += theta * z * z.transpose() * et;
  }
  sig.block(0, 1, 1, dim - 1) = sig.block(1, 0, dim - 1, 1).transpose();
  return sig / static_cast<double>(sample.n());
}

}  // namespace

Vector CoxFit::params() const {
  Vector out(beta_hat.size() + 1);
  out[0] = theta_hat;
  out.tail(beta_hat.size()) = beta_hat;
  return out;
}

RiskAverages::RiskAverages(const SurvivalSample& sample, const Vector& beta) {
  check_beta(sample, beta);
  dim_ = sample.covariate_dim();
  const RiskPath path = build_risk_path(sample);
  knots_ = path.knots;
  const std::size_t gaps = path.gap_count();
  const auto q = static_cast<Eigen::Index>(dim_);
  // difference arrays over knot indices
  std::vector<double> dr(gaps + 1, 0.0);
  std::vector<Vector> dr1(gaps + 1, Vector::Zero(q));
  const double tau = horizon(sample);
  auto index = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(knots_.begin(), knots_.end(), x) - knots_.begin());
  };
  for (const auto& sub : sample.subjects()) {
    const double hi = std::min(sub.exit_time, tau);
    if (!(hi > sub.entry_time)) continue;
    const Vector z = covariates(sub, dim_);
    const double w = std::exp(beta.dot(z));
    const std::size_t g0 = index(sub.entry_time);
    const std::size_t g1 = index(hi);
    dr[g0] += w;
    dr[g1] -= w;
    dr1[g0] += w * z;
    dr1[g1] -= w * z;
  }
  const double n = static_cast<double>(sample.n());
  r_.resize(gaps);
  r1_.resize(gaps);
  double acc = 0.0;
  Vector acc1 = Vector::Zero(q);
  for (std::size_t g = 0; g < gaps; ++g) {
    acc += dr[g];
    acc1 += dr1[g];
    // the running sum drifts slightly away from zero on empty gaps
    r_[g] = path.gap_risk[g] > 0 ? acc / n : 0.0;
    r1_[g] = path.gap_risk[g] > 0 ? Vector(acc1 / n) : Vector::Zero(q);
  }
}

std::size_t RiskAverages::gap_of(double s) const {
  if (s <= 0.0 || s > knots_.back()) return r_.size();
  return static_cast<std::size_t>(std::lower_bound(knots_.begin(), knots_.end(), s) - knots_.begin()) - 1;
}

double RiskAverages::r(double s) const {
  const std::size_t g = gap_of(s);
  return g < r_.size() ? r_[g] : 0.0;
}

Vector RiskAverages::r1(double s) const {
  const std::size_t g = gap_of(s);
  return g < r1_.size() ? r1_[g] : Vector::Zero(static_cast<Eigen::Index>(dim_));
}

Vector RiskAverages::e(double s) const {
  const std::size_t g = gap_of(s);
  if (g >= r_.size() || r_[g] <= 0.0) throw DataError("E(s) undefined: nobody at risk");
  return r1_[g] / r_[g];
}

double cox_log_likelihood(const SurvivalSample& sample, double theta, const Vector& beta) {
  check_beta(sample, beta);
  if (!(theta > 0.0)) throw ModelError("theta must be positive");
  const double tau = horizon(sample);
  double ll = 0.0;
  for (const auto& sub : sample.subjects()) {
    const double lp = beta.dot(covariates(sub, sample.covariate_dim()));
    if (counts(sub, tau)) ll += std::log(theta) + lp;
    ll -= theta * std::exp(lp) * exposure(sub, tau);
  }
  return ll;
}

CoxFit fit_cox_exponential(const SurvivalSample& sample, const CoxOptions& options) {
  const std::size_t q = sample.covariate_dim();
  const double tau = horizon(sample);
  double events = 0.0;
  for (const auto& sub : sample.subjects())
    if (counts(sub, tau)) events += 1.0;
  if (events == 0.0) throw DataError("cox fit needs at least one event");

  std::vector<Vector> x;
  std::vector<double> expo, delta;
  for (const auto& sub : sample.subjects()) {
    Vector xi(static_cast<Eigen::Index>(q + 1));
    xi[0] = 1.0;
    xi.tail(static_cast<Eigen::Index>(q)) = covariates(sub, q);
    x.push_back(xi);
    expo.push_back(exposure(sub, tau));
    delta.push_back(counts(sub, tau) ? 1.0 : 0.0);
  }

  CoxFit fit;
  const double n = static_cast<double>(sample.n());
  if (options.fixed_beta) {
    check_beta(sample, *options.fixed_beta);
    double denom = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      denom += std::exp(options.fixed_beta->dot(x[j].tail(static_cast<Eigen::Index>(q)))) * expo[j];
    fit.theta_hat = events / denom;
    fit.beta_hat = *options.fixed_beta;
    fit.beta_fixed = true;
    fit.converged = true;
    fit.message = "closed form";
  } else {
    // Poisson regression of delta on x with log-exposure offset: concave in (log theta, beta)
    const auto dim = static_cast<Eigen::Index>(q + 1);
    Vector eta = Vector::Zero(dim);
    double total_exposure = 0.0;
    for (double e : expo) total_exposure += e;
    eta[0] = std::log(events / total_exposure);
    auto objective = [&](const Vector& b) {
      double ll = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double lp = x[j].dot(b);
        ll += delta[j] * lp - std::exp(lp) * expo[j];
      }
      return ll;
    };
    double ll = objective(eta);
    int it = 0;
    for (; it < options.max_iterations; ++it) {
      Vector grad = Vector::Zero(dim);
      Matrix info = Matrix::Zero(dim, dim);
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double mu = std::exp(x[j].dot(eta)) * expo[j];
        grad += (delta[j] - mu) * x[j];
        info += mu * x[j] * x[j].transpose();
      }
      fit.grad_norm = grad.cwiseAbs().maxCoeff();
      if (fit.grad_norm < options.tolerance * std::max(1.0, events)) {
        // vanishing curvature at the optimum means a coefficient ran off (separation)
        Eigen::SelfAdjointEigenSolver<Matrix> eig(info);
        fit.converged = eig.eigenvalues().minCoeff() > 1e-9 * eig.eigenvalues().maxCoeff();
        break;
      }
      Eigen::LDLT<Matrix> ldlt(info);
      if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff())
        throw ModelError("cox fit: information matrix singular (collinear covariates?)");
      Vector step = ldlt.solve(grad);
      double scale = 1.0;
      Vector next = eta + step;
      double ll_next = objective(next);
      for (int halve = 0; halve < 30 && !(ll_next >= ll - 1e-12 * std::abs(ll)); ++halve) {
        scale *= 0.5;
        next = eta + scale * step;
        ll_next = objective(next);
      }
      eta = next;
      ll = ll_next;
      if (eta.cwiseAbs().maxCoeff() > 30.0) break;
    }
    fit.iterations = it;
    if (!fit.converged) {
      std::ostringstream msg;
      msg << "cox fit did not converge after " << it << " iterations (max |gradient| "
          << fit.grad_norm << ", max |coefficient| " << eta.cwiseAbs().maxCoeff()
          << "); separation or collinearity likely";
      throw ModelError(msg.str());
    }
    fit.theta_hat = std::exp(eta[0]);
    fit.beta_hat = eta.tail(static_cast<Eigen::Index>(q));
    fit.message = "converged";
  }
  fit.loglik = cox_log_likelihood(sample, fit.theta_hat, fit.beta_hat);
  fit.sigma = sigma_blocks(sample, fit.theta_hat, fit.beta_hat);
  const Matrix free = fit.beta_fixed ? Matrix(fit.sigma.topLeftCorner(1, 1)) : fit.sigma;
  fit.cov = spd_inverse(free, "cox Sigma") / n;
  fit.std_errors = fit.cov.diagonal().cwiseSqrt();
  return fit;
}

namespace {

NlhCurve cox_curve(const CoxFit& fit, const SurvivalSample& sample, PlotType type) {
  check_beta(sample, fit.beta_hat);
  const RiskPath path = build_risk_path(sample);
  const RiskAverages avg(sample, fit.beta_hat);
  const double n = static_cast<double>(sample.n());
  const double th = fit.theta_hat;
  const auto q = static_cast<Eigen::Index>(sample.covariate_dim());
  const Eigen::Index p = fit.beta_fixed ? 1 : q + 1;
  const Matrix sigma_inv = spd_inverse(fit.sigma.topLeftCorner(p, p), "cox Sigma");

  NlhCurve out;
  out.model_id = "cox-exponential";
  out.theta = fit.params();
  out.type = type;
  out.flavor = VarianceFlavor::Parametric;

  double jumps = 0.0, comp = 0.0, lead = 0.0;
  Vector c = Vector::Zero(q + 1);
  std::size_t g = 0;
  for (std::size_t i = 0; i < path.event_times.size(); ++i) {
    const double u = path.event_times[i];
    for (; g < path.gap_count() && path.knots[g + 1] <= u; ++g) {
      const double r = avg.gap_r()[g];
      if (r <= 0.0) continue;
      const double len = path.knots[g + 1] - path.knots[g];
      if (type == PlotType::A) {
        comp += th * len;
        lead += th / r * len;
        c[0] += len;
        c.tail(q) += th * avg.gap_r1()[g] / r * len;
      } else {
        comp += th * r * len;
        lead += th * r * len;
        c[0] += r * len;
        c.tail(q) += th * avg.gap_r1()[g] * len;
      }
    }
    // kappa has no jumps; only D moves at u
    const Vector cp = c.head(p);
    const double k2 = lead - cp.dot(sigma_inv * cp);
    const double floor = std::max(1e-8, std::sqrt(64.0 * std::numeric_limits<double>::epsilon())) *
                         std::sqrt(std::max(lead, 0.0));
    const double kappa = std::sqrt(std::max(k2, 0.0));
    const bool ok = k2 > 0.0 && kappa > floor;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.nlh_left.push_back(ok ? std::sqrt(n) * (jumps - comp) / kappa : nan);

    const double dn = path.events[i];
    const double r_u = avg.gap_r()[path.event_gap[i]];
    jumps += type == PlotType::A ? dn / (n * r_u) : dn / n;
    const double d = std::sqrt(n) * (jumps - comp);
    out.times.push_back(u);
    out.d_n.push_back(d);
    out.kappa2.push_back(k2);
    out.kappa.push_back(kappa);
    out.defined.push_back(ok);
    out.nlh.push_back(ok ? d / kappa : nan);
  }
  return out;
}

}  // namespace

NlhCurve cox_curve_type_a(const CoxFit& fit, const SurvivalSample& sample) {
  return cox_curve(fit, sample, PlotType::A);
}

NlhCurve cox_curve_type_b(const CoxFit& fit, const SurvivalSample& sample) {
  return cox_curve(fit, sample, PlotType::B);
}

}  // namespace nlh
