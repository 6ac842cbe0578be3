#include "nlh/discrete_nlh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nlh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class ConstantDiscrete final : public DiscreteModel {
 public:
  std::string id() const override { return "constant"; }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  double hazard(double, double, const Vector& th) const override { return th[0]; }
  Vector hazard_gradient(double, double, const Vector&) const override { return Vector::Ones(1); }
  bool admissible(const Vector& th) const override { return th.size() == 1 && th[0] > 0.0 && th[0] < 1.0; }
  Vector to_free(const Vector& th) const override {
    return Vector::Constant(1, std::log(th[0] / (1.0 - th[0])));
  }
  Vector from_free(const Vector& eta) const override {
    return Vector::Constant(1, 1.0 / (1.0 + std::exp(-eta[0])));
  }
  Vector start(const DiscreteTable& t) const override {
    double y = 0.0, d = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      y += static_cast<double>(t.at_risk[i]);
      d += static_cast<double>(t.events[i]);
    }
    return Vector::Constant(1, std::clamp(d / y, 1e-6, 1.0 - 1e-6));
  }
};

class GroupedDiscrete final : public DiscreteModel {
 public:
  explicit GroupedDiscrete(ModelPtr m) : m_(std::move(m)) {}
  std::string id() const override { return "grouped:" + m_->id(); }
  std::vector<std::string> param_names() const override { return m_->param_names(); }
  double hazard(double l, double r, const Vector& th) const override {
    return -std::expm1(-(m_->cum_hazard(r, th) - m_->cum_hazard(l, th)));
  }
  Vector hazard_gradient(double l, double r, const Vector& th) const override {
    const double dh = m_->cum_hazard(r, th) - m_->cum_hazard(l, th);
    return std::exp(-dh) * (m_->cum_score(r, th) - m_->cum_score(l, th));
  }
  bool admissible(const Vector& th) const override { return m_->admissible(th); }
  Vector to_free(const Vector& th) const override { return m_->to_free(th); }
  Vector from_free(const Vector& eta) const override { return m_->from_free(eta); }
  Vector start(const DiscreteTable& t) const override {
    const auto tr = m_->transforms();
    Vector th(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const bool zero_ok = i > 0 && tr[i].kind != ParamTransform::Kind::Log && tr[i].admits(0.0);
      th[static_cast<Eigen::Index>(i)] = zero_ok ? 0.0 : tr[i].from_free(0.0);
    }
    // scale so that expected events match observed ones
    const Eigen::Index k = m_->id() == "gamma" ? 1 : 0;
    if (tr[static_cast<std::size_t>(k)].kind != ParamTransform::Kind::Log) return th;
    double events = 0.0;
    for (auto e : t.events) events += static_cast<double>(e);
    auto excess = [&](double ls) {
      Vector x = th;
      x[k] = std::exp(ls);
      double ex = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i)
        ex += static_cast<double>(t.at_risk[i]) * hazard(t.left[i], t.right[i], x);
      return ex - events;
    };
    double lo = -30.0, hi = 30.0;
    if (!(excess(lo) < 0.0 && excess(hi) > 0.0)) return th;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    th[k] = std::exp(0.5 * (lo + hi));
    return th;
  }

 private:
  ModelPtr m_;
};

double default_n(const DiscreteTable& t) {
  long m = 0;
  for (auto y : t.at_risk) m = std::max(m, y);
  return static_cast<double>(m);
}

// h = 0 is allowed for cells without events (before an onset); such cells carry no information.
void check_hazard(double h, std::size_t i, const DiscreteTable& t) {
  if (h == 0.0 && t.events[i] == 0) return;
  if (!(h > 0.0 && h < 1.0)) {
    std::ostringstream msg;
    msg << "discrete hazard " << h << " outside (0, 1) in cell " << i << " [" << t.left[i] << ", "
        << t.right[i] << ")";
    throw ModelError(msg.str());
  }
}

Matrix restrict(const Matrix& m, const std::vector<Eigen::Index>& free) {
  const auto p = static_cast<Eigen::Index>(free.size());
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      out(i, j) = m(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  return out;
}

Vector restrict(const Vector& v, const std::vector<Eigen::Index>& free) {
  Vector out(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[free[k]];
  return out;
}

}  // namespace

DiscreteModelPtr constant_discrete_model() { return std::make_shared<ConstantDiscrete>(); }

DiscreteModelPtr grouped_model(ModelPtr continuous) {
  if (!continuous) throw ModelError("grouped model needs a continuous model");
  return std::make_shared<GroupedDiscrete>(std::move(continuous));
}

std::vector<Eigen::Index> DiscreteFit::free_indices() const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (!fixed[i]) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

double discrete_log_likelihood(const DiscreteModel& model, const Vector& theta,
                               const DiscreteTable& table) {
  double ll = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.at_risk[i] == 0) continue;
    const double h = model.hazard(table.left[i], table.right[i], theta);
    check_hazard(h, i, table);
    if (h == 0.0) continue;
    const double d = static_cast<double>(table.events[i]);
    ll += d * std::log(h) + (static_cast<double>(table.at_risk[i]) - d) * std::log1p(-h);
  }
  return ll;
}

Vector discrete_score(const DiscreteModel& model, const Vector& theta, const DiscreteTable& table) {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.at_risk[i] == 0) continue;
    const double h = model.hazard(table.left[i], table.right[i], theta);
    check_hazard(h, i, table);
    if (h == 0.0) continue;
    const double y = static_cast<double>(table.at_risk[i]);
    u += (static_cast<double>(table.events[i]) - y * h) / (h * (1.0 - h)) *
         model.hazard_gradient(table.left[i], table.right[i], theta);
  }
  return u;
}

Matrix sigma_discrete(const DiscreteModel& model, const Vector& theta, const DiscreteTable& table,
                      double n) {
  const auto p = static_cast<Eigen::Index>(model.dim());
  Matrix s = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.at_risk[i] == 0) continue;
    const double h = model.hazard(table.left[i], table.right[i], theta);
    check_hazard(h, i, table);
    if (h == 0.0) continue;
    const Vector g = model.hazard_gradient(table.left[i], table.right[i], theta);
    s += static_cast<double>(table.at_risk[i]) / n / (h * (1.0 - h)) * g * g.transpose();
  }
  return s;
}

DiscreteFit fit_discrete(const DiscreteModel& model, const DiscreteTable& table,
                         const DiscreteFitOptions& options) {
  table.validate();
  const auto p = static_cast<Eigen::Index>(model.dim());
  DiscreteFit fit;
  fit.model_id = model.id();
  fit.n = options.n ? *options.n : default_n(table);
  if (!(fit.n > 0.0)) throw DataError("discrete fit: nobody at risk");
  fit.fixed = options.fixed.empty() ? std::vector<bool>(static_cast<std::size_t>(p), false) : options.fixed;
  if (fit.fixed.size() != static_cast<std::size_t>(p)) throw ModelError("fixed mask has the wrong length");
  double events = 0.0, exposure = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    events += static_cast<double>(table.events[i]);
    exposure += static_cast<double>(table.at_risk[i]);
  }
  if (events == 0.0) throw DataError("discrete fit needs at least one event");
  const auto free = fit.free_indices();

  if (model.id() == "constant" && !free.empty()) {
    if (events >= exposure) throw ModelError("constant discrete hazard estimate is 1");
    fit.theta_hat = Vector::Constant(1, events / exposure);
    fit.converged = true;
    fit.message = "closed form";
  } else {
    Vector theta = options.init ? *options.init : model.start(table);
    if (!model.admissible(theta)) throw ModelError("discrete fit: inadmissible start");
    Vector eta = model.to_free(theta);
    double ll = discrete_log_likelihood(model, theta, table);
    // Fisher scoring in free coordinates; the Jacobian is taken numerically
    auto jac = [&](const Vector& e) {
      Vector d(p);
      for (Eigen::Index k = 0; k < p; ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(e[k]));
        Vector up = e, dn = e;
        up[k] += step;
        dn[k] -= step;
        d[k] = (model.from_free(up)[k] - model.from_free(dn)[k]) / (2.0 * step);
      }
      return d;
    };
    int it = 0;
    for (; it < options.max_iterations; ++it) {
      const Vector j = jac(eta);
      const Vector u = restrict(Vector(discrete_score(model, theta, table).cwiseProduct(j)), free);
      Matrix info = sigma_discrete(model, theta, table, 1.0);
      info = j.asDiagonal() * info * j.asDiagonal();
      const Matrix fi = restrict(info, free);
      fit.grad_norm = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
      const double scale = std::max(1.0, std::abs(ll));
      if (fit.grad_norm * std::max(1.0, eta.cwiseAbs().maxCoeff()) < options.tolerance * scale) {
        fit.converged = true;
        break;
      }
      Eigen::LDLT<Matrix> ldlt(fi);
      if (ldlt.info() != Eigen::Success) throw ModelError("discrete fit: singular information");
      const Vector step = ldlt.solve(u);
      double t = 1.0;
      bool moved = false;
      for (int halve = 0; halve < 40; ++halve, t *= 0.5) {
        Vector next = eta;
        for (std::size_t k = 0; k < free.size(); ++k) next[free[k]] += t * step[static_cast<Eigen::Index>(k)];
        const Vector th = model.from_free(next);
        if (!model.admissible(th)) continue;
        double l2;
        try {
          l2 = discrete_log_likelihood(model, th, table);
        } catch (const ModelError&) {
          continue;
        }
        if (l2 >= ll - 1e-13 * scale) {
          eta = next;
          theta = th;
          moved = l2 > ll || t == 1.0;
          ll = l2;
          break;
        }
      }
      if (!moved) {
        fit.message = "step halving failed";
        break;
      }
    }
    fit.iterations = it;
    fit.theta_hat = theta;
    if (!fit.converged && fit.message.empty()) fit.message = "iteration limit";
    if (fit.converged) fit.message = "converged";
  }
  fit.loglik = discrete_log_likelihood(model, fit.theta_hat, table);
  fit.sigma = sigma_discrete(model, fit.theta_hat, table, fit.n);
  fit.cov = Matrix::Zero(p, p);
  fit.std_errors = Vector::Zero(p);
  if (!free.empty()) {
    const Matrix inv = spd_inverse(restrict(fit.sigma, free), "discrete Sigma") / fit.n;
    for (std::size_t i = 0; i < free.size(); ++i)
      for (std::size_t j = 0; j < free.size(); ++j)
        fit.cov(free[i], free[j]) = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    fit.std_errors = fit.cov.diagonal().cwiseSqrt();
  }
  return fit;
}

NlhCurve discrete_curve(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table,
                        const std::vector<double>& weights) {
  if (weights.size() != table.size()) throw DataError("one weight per cell required");
  const auto free = fit.free_indices();
  const auto p = static_cast<Eigen::Index>(free.size());
  const double n = fit.n;
  Matrix sinv;
  if (p > 0) sinv = spd_inverse(restrict(fit.sigma, free), "discrete Sigma");

  NlhCurve out;
  out.model_id = model.id();
  out.theta = fit.theta_hat;
  out.flavor = VarianceFlavor::Parametric;
  double d = 0.0, lead = 0.0;
  Vector c = Vector::Zero(p);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double y = static_cast<double>(table.at_risk[i]);
    if (y == 0.0) continue;
    const double h = model.hazard(table.left[i], table.right[i], fit.theta_hat);
    check_hazard(h, i, table);
    const double k = h == 0.0 ? 0.0 : weights[i];
    d += k / y * (static_cast<double>(table.events[i]) - y * h);
    lead += k * k * n / y * h * (1.0 - h);
    if (p > 0) c += k * restrict(model.hazard_gradient(table.left[i], table.right[i], fit.theta_hat), free);
    const double k2 = p > 0 ? lead - c.dot(sinv * c) : lead;
    const double dn = std::sqrt(n) * d;
    const double floor = std::max(1e-8, std::sqrt(64.0 * std::numeric_limits<double>::epsilon())) *
                         std::sqrt(std::max(lead, 0.0));
    const double kappa = std::sqrt(std::max(k2, 0.0));
    const bool ok = k2 > 0.0 && kappa > floor;
    out.times.push_back(table.right[i]);
    out.d_n.push_back(dn);
    out.kappa2.push_back(k2);
    out.kappa.push_back(kappa);
    out.defined.push_back(ok);
    out.nlh.push_back(ok ? dn / kappa : kNaN);
  }
  return out;
}

NlhCurve discrete_curve(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table,
                        PlotType type) {
  if (type == PlotType::C) throw ModelError("discrete curves take explicit weights for Type C");
  std::vector<double> k(table.size(), 1.0);
  if (type == PlotType::B)
    for (std::size_t i = 0; i < table.size(); ++i) k[i] = static_cast<double>(table.at_risk[i]) / fit.n;
  auto out = discrete_curve(model, fit, table, k);
  out.type = type;
  return out;
}

DeltaPlot delta_plot(const DiscreteModel& model, const DiscreteFit& fit, const DiscreteTable& table) {
  const auto free = fit.free_indices();
  const auto p = static_cast<Eigen::Index>(free.size());
  Matrix sinv;
  if (p > 0) sinv = spd_inverse(restrict(fit.sigma, free), "discrete Sigma");
  const double n = fit.n;
  DeltaPlot out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    out.midpoints.push_back(0.5 * (table.left[i] + table.right[i]));
    const double y = static_cast<double>(table.at_risk[i]);
    if (y == 0.0) {
      out.w2.push_back(kNaN);
      out.residual.push_back(kNaN);
      out.defined.push_back(false);
      continue;
    }
    const double h = model.hazard(table.left[i], table.right[i], fit.theta_hat);
    check_hazard(h, i, table);
    const double lead = n / y * h * (1.0 - h);
    double w2 = lead;
    if (h == 0.0) {
      out.w2.push_back(0.0);
      out.residual.push_back(kNaN);
      out.defined.push_back(false);
      continue;
    }
    if (p > 0) {
      const Vector g = restrict(model.hazard_gradient(table.left[i], table.right[i], fit.theta_hat), free);
      w2 -= g.dot(sinv * g);
    }
    const double w = std::sqrt(std::max(w2, 0.0));
    const bool ok = w2 > 0.0 && w > 1e-8 * std::sqrt(lead);
    out.w2.push_back(w2);
    out.defined.push_back(ok);
    out.residual.push_back(ok ? std::sqrt(n) * (static_cast<double>(table.events[i]) / y - h) / w : kNaN);
  }
  return out;
}

}  // namespace nlh
