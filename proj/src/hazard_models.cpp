#include "nlh/hazard_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "nlh/quadrature.hpp"
#include "nlh/special_functions.hpp"
#include "nlh/survival_data.hpp"

namespace nlh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// E_k(x) = \int_0^1 u^{k-1} e^{xu} du for k = 1, 2, 3.
double exp_moment(int k, double x) {
  if (std::abs(x) < 1.0) {
    double term = 1.0;  // x^j / j!
    double sum = 0.0;
    for (int j = 0; j < 40; ++j) {
      sum += term / (j + k);
      term *= x / (j + 1);
    }
    return sum;
  }
  const double e = std::exp(x);
  switch (k) {
    case 1:
      return std::expm1(x) / x;
    case 2:
      return ((x - 1.0) * e + 1.0) / (x * x);
    default:
      return ((x * x - 2.0 * x + 2.0) * e - 2.0) / (x * x * x);
  }
}

// A_k(x) = \int_0^1 u^{k-1} (1 + xu)^{-k} du for k = 1, 2, 3.
double frailty_moment(int k, double x) {
  if (std::abs(x) < 0.25) {
    double sum = 0.0;
    double power = 1.0;  // (-x)^j
    for (int j = 0; j < 60; ++j) {
      double binom = 1.0;  // C(j + k - 1, k - 1)
      if (k == 2) binom = j + 1.0;
      if (k == 3) binom = (j + 1.0) * (j + 2.0) / 2.0;
      sum += binom * power / (j + k);
      power *= -x;
    }
    return sum;
  }
  const double l = std::log1p(x);
  const double v = 1.0 / (1.0 + x);
  switch (k) {
    case 1:
      return l / x;
    case 2:
      return (l + v - 1.0) / (x * x);
    default:
      return (l + 2.0 * v - 0.5 * v * v - 1.5) / (x * x * x);
  }
}

// (1/z) log1p(z) and (1/z) expm1(z), continuous at zero.
double log1p_ratio(double z) { return std::abs(z) < 1e-12 ? 1.0 - 0.5 * z : std::log1p(z) / z; }
double expm1_ratio(double z) { return std::abs(z) < 1e-12 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

ParamTransform log_transform() { return {ParamTransform::Kind::Log, 0.0}; }
ParamTransform identity_transform() { return {ParamTransform::Kind::Identity, 0.0}; }
ParamTransform shifted_log(double lower) { return {ParamTransform::Kind::ShiftedLog, lower}; }

class Exponential final : public HazardModel {
 public:
  std::string id() const override { return "exponential"; }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  std::vector<ParamTransform> transforms() const override { return {log_transform()}; }
  double hazard(double, const Vector& th) const override { return th[0]; }
  double cum_hazard(double t, const Vector& th) const override { return th[0] * t; }
  Vector score(double, const Vector& th) const override { return vec({1.0 / th[0]}); }
  Vector cum_score(double t, const Vector&) const override { return vec({t}); }
  Matrix info_integral(double t, const Vector& th) const override {
    Matrix m(1, 1);
    m(0, 0) = t / th[0];
    return m;
  }
  bool closed_form_info() const override { return true; }
  bool proportional() const override { return true; }
  double inverse_cum_hazard(double y, const Vector& th) const override { return y / th[0]; }
};

class Weibull final : public HazardModel {
 public:
  std::string id() const override { return "weibull"; }
  std::vector<std::string> param_names() const override { return {"theta", "beta"}; }
  std::vector<ParamTransform> transforms() const override {
    return {log_transform(), log_transform()};
  }
  double hazard(double s, const Vector& th) const override {
    return th[0] * th[1] * std::pow(s, th[1] - 1.0);
  }
  double cum_hazard(double t, const Vector& th) const override {
    return t <= 0.0 ? 0.0 : th[0] * std::pow(t, th[1]);
  }
  Vector score(double s, const Vector& th) const override {
    return vec({1.0 / th[0], 1.0 / th[1] + std::log(s)});
  }
  Vector cum_score(double t, const Vector& th) const override {
    if (t <= 0.0) return Vector::Zero(2);
    const double tb = std::pow(t, th[1]);
    return vec({tb, th[0] * tb * std::log(t)});
  }
  Matrix info_integral(double t, const Vector& th) const override {
    Matrix m = Matrix::Zero(2, 2);
    if (t <= 0.0) return m;
    const double theta = th[0];
    const double beta = th[1];
    const double tb = std::pow(t, beta);
    const double l = beta * std::log(t);  // log t^beta
    m(0, 0) = tb / theta;
    m(0, 1) = m(1, 0) = tb * l / beta;
    m(1, 1) = theta / (beta * beta) * tb * (1.0 + l * l);
    return m;
  }
  bool closed_form_info() const override { return true; }
  bool proportional() const override { return true; }
  double inverse_cum_hazard(double y, const Vector& th) const override {
    return std::pow(y / th[0], 1.0 / th[1]);
  }
};

class Gompertz final : public HazardModel {
 public:
  std::string id() const override { return "gompertz"; }
  std::vector<std::string> param_names() const override { return {"theta", "beta"}; }
  std::vector<ParamTransform> transforms() const override {
    return {log_transform(), identity_transform()};
  }
  double hazard(double s, const Vector& th) const override { return th[0] * std::exp(th[1] * s); }
  double cum_hazard(double t, const Vector& th) const override {
    return th[0] * t * exp_moment(1, th[1] * t);
  }
  Vector score(double s, const Vector& th) const override { return vec({1.0 / th[0], s}); }
  Vector cum_score(double t, const Vector& th) const override {
    const double x = th[1] * t;
    return vec({t * exp_moment(1, x), th[0] * t * t * exp_moment(2, x)});
  }
  Matrix info_integral(double t, const Vector& th) const override {
    const double x = th[1] * t;
    Matrix m(2, 2);
    m(0, 0) = t * exp_moment(1, x) / th[0];
    m(0, 1) = m(1, 0) = t * t * exp_moment(2, x);
    m(1, 1) = th[0] * t * t * t * exp_moment(3, x);
    return m;
  }
  bool closed_form_info() const override { return true; }
  bool proportional() const override { return true; }
  double inverse_cum_hazard(double y, const Vector& th) const override {
    const double z = th[1] * y / th[0];
    if (z <= -1.0) return kInf;
    return y / th[0] * log1p_ratio(z);
  }
};

class SimpleFrailty final : public HazardModel {
 public:
  explicit SimpleFrailty(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0)) throw ModelError("frailty offset must be positive");
  }
  std::string id() const override { return "frailty"; }
  std::vector<std::string> param_names() const override { return {"theta", "beta"}; }
  std::vector<ParamTransform> transforms() const override {
    return {log_transform(), shifted_log(-epsilon_)};
  }
  double hazard(double s, const Vector& th) const override { return th[0] / (1.0 + th[1] * s); }
  double cum_hazard(double t, const Vector& th) const override {
    return th[0] * t * frailty_moment(1, th[1] * t);
  }
  Vector score(double s, const Vector& th) const override {
    return vec({1.0 / th[0], -s / (1.0 + th[1] * s)});
  }
  Vector cum_score(double t, const Vector& th) const override {
    const double x = th[1] * t;
    return vec({t * frailty_moment(1, x), -th[0] * t * t * frailty_moment(2, x)});
  }
  Matrix info_integral(double t, const Vector& th) const override {
    const double x = th[1] * t;
    Matrix m(2, 2);
    m(0, 0) = t * frailty_moment(1, x) / th[0];
    m(0, 1) = m(1, 0) = -t * t * frailty_moment(2, x);
    m(1, 1) = th[0] * t * t * t * frailty_moment(3, x);
    return m;
  }
  bool closed_form_info() const override { return true; }
  bool proportional() const override { return true; }
  double inverse_cum_hazard(double y, const Vector& th) const override {
    return y / th[0] * expm1_ratio(th[1] * y / th[0]);
  }

 private:
  double epsilon_;
};

class Gamma final : public HazardModel {
 public:
  std::string id() const override { return "gamma"; }
  std::vector<std::string> param_names() const override { return {"alpha", "theta"}; }
  std::vector<ParamTransform> transforms() const override {
    return {log_transform(), log_transform()};
  }

  double hazard(double s, const Vector& th) const override {
    const double alpha = th[0];
    if (s <= 0.0) return alpha < 1.0 ? kInf : (alpha == 1.0 ? th[1] : 0.0);
    return std::exp(log_hazard(s, th));
  }
  double cum_hazard(double t, const Vector& th) const override {
    if (t <= 0.0) return 0.0;
    return -log_q(th[0], th[1] * t);
  }
  Vector score(double s, const Vector& th) const override {
    const double alpha = th[0];
    const double theta = th[1];
    const double x = theta * s;
    const double psi_alpha = std::log(x) - special::digamma(alpha) + alpha_tail_term(alpha, x);
    const double psi_theta =
        (alpha - x) / theta +
        std::exp(alpha * std::log(x) - x - std::lgamma(alpha) - log_q(alpha, x)) / theta;
    return vec({psi_alpha, psi_theta});
  }
  Vector cum_score(double t, const Vector& th) const override {
    if (t <= 0.0) return Vector::Zero(2);
    const double alpha = th[0];
    const double x = th[1] * t;
    const double d_alpha = alpha_tail_term(alpha, x);
    const double d_theta =
        t * std::exp((alpha - 1.0) * std::log(x) - x - std::lgamma(alpha) - log_q(alpha, x));
    return vec({d_alpha, d_theta});
  }
  double inverse_cum_hazard(double y, const Vector& th) const override {
    if (y > 700.0) return HazardModel::inverse_cum_hazard(y, th);
    return boost::math::gamma_q_inv(th[0], std::exp(-y)) / th[1];
  }

 private:
  static double log_q(double alpha, double x) {
    const double lq = special::log_gamma_q(alpha, x);
    if (!std::isfinite(lq)) throw ModelError("gamma model: beyond support precision");
    return lq;
  }
  static double log_hazard(double s, const Vector& th) {
    const double alpha = th[0];
    const double theta = th[1];
    const double x = theta * s;
    return alpha * std::log(theta) + (alpha - 1.0) * std::log(s) - x - std::lgamma(alpha) -
           log_q(alpha, x);
  }
  // -d log Q(alpha, x) / d alpha = {F0*(x) - digamma F0(x)} / {1 - F0(x)}.
  static double alpha_tail_term(double alpha, double x) {
    const double dg = special::digamma(alpha);
    if (x < alpha + 1.0) {
      const double p = special::gamma_p(alpha, x);
      return (special::log_weighted_gamma_lower(x, alpha) - dg * p) / (1.0 - p);
    }
    return dg - special::conditional_log_mean_upper(x, alpha);
  }
};

class DelayedPower final : public HazardModel {
 public:
  explicit DelayedPower(double onset) : onset_(onset) {
    if (!(onset >= 0.0)) throw ModelError("onset must be >= 0");
  }
  std::string id() const override { return "delayed_power"; }
  std::vector<std::string> param_names() const override { return {"a", "k"}; }
  std::vector<ParamTransform> transforms() const override {
    return {log_transform(), shifted_log(-1.0)};
  }
  double hazard(double s, const Vector& th) const override {
    return s <= onset_ ? 0.0 : th[0] * std::pow(s - onset_, th[1]);
  }
  double cum_hazard(double t, const Vector& th) const override {
    if (t <= onset_) return 0.0;
    return th[0] * std::pow(t - onset_, th[1] + 1.0) / (th[1] + 1.0);
  }
  Vector score(double s, const Vector& th) const override {
    return vec({1.0 / th[0], std::log(s - onset_)});
  }
  Vector cum_score(double t, const Vector& th) const override {
    if (t <= onset_) return Vector::Zero(2);
    const double big = cum_hazard(t, th);
    return vec({big / th[0], big * (std::log(t - onset_) - 1.0 / (th[1] + 1.0))});
  }
  Matrix info_integral(double t, const Vector& th) const override {
    Matrix m = Matrix::Zero(2, 2);
    if (t <= onset_) return m;
    const double big = cum_hazard(t, th);
    const double l = std::log(t - onset_);
    const double q = 1.0 / (th[1] + 1.0);
    m(0, 0) = big / (th[0] * th[0]);
    m(0, 1) = m(1, 0) = big / th[0] * (l - q);
    m(1, 1) = big * (l * l - 2.0 * l * q + 2.0 * q * q);
    return m;
  }
  bool closed_form_info() const override { return true; }
  std::vector<double> breakpoints() const override { return {onset_}; }
  bool proportional() const override { return true; }
  double inverse_cum_hazard(double y, const Vector& th) const override {
    return onset_ + std::pow((th[1] + 1.0) * y / th[0], 1.0 / (th[1] + 1.0));
  }

 private:
  double onset_;
};

// h = lambda / (1 + (delta/alpha) Lambda)^alpha over a base (lambda, Lambda).
class CompoundPoissonFrailty final : public HazardModel {
 public:
  explicit CompoundPoissonFrailty(ModelPtr base) : base_(std::move(base)) {
    if (!base_) throw ModelError("compound Poisson frailty needs a base model");
  }
  std::string id() const override { return "cpfrailty(" + base_->id() + ")"; }
  std::vector<std::string> param_names() const override {
    auto names = base_->param_names();
    names.emplace_back("alpha");
    names.emplace_back("delta");
    return names;
  }
  std::vector<ParamTransform> transforms() const override {
    auto t = base_->transforms();
    t.push_back(log_transform());
    t.push_back(log_transform());
    return t;
  }
  double hazard(double s, const Vector& th) const override {
    const auto [b, alpha, delta] = split(th);
    const double lambda = base_->hazard(s, b);
    const double big = base_->cum_hazard(s, b);
    return lambda * std::exp(-alpha * std::log1p(delta / alpha * big));
  }
  double cum_hazard(double t, const Vector& th) const override {
    const auto [b, alpha, delta] = split(th);
    return cum_from_base(base_->cum_hazard(t, b), alpha, delta);
  }
  Vector score(double s, const Vector& th) const override {
    const auto [b, alpha, delta] = split(th);
    const double big = base_->cum_hazard(s, b);
    const double c = delta / alpha;
    const double u = 1.0 + c * big;
    const std::size_t pb = base_->dim();
    Vector out(static_cast<Eigen::Index>(pb + 2));
    out.head(static_cast<Eigen::Index>(pb)) =
        base_->score(s, b) - delta / u * base_->cum_score(s, b);
    out[pb] = -std::log1p(c * big) + c * big / u;
    out[pb + 1] = -big / u;
    return out;
  }
  Vector cum_score(double t, const Vector& th) const override {
    const auto [b, alpha, delta] = split(th);
    const double big = base_->cum_hazard(t, b);
    const double c = delta / alpha;
    const double u_pow = std::exp(-alpha * std::log1p(c * big));
    const std::size_t pb = base_->dim();
    Vector out(static_cast<Eigen::Index>(pb + 2));
    out.head(static_cast<Eigen::Index>(pb)) = u_pow * base_->cum_score(t, b);
    const double step = 1e-5 * alpha;
    out[pb] = (cum_from_base(big, alpha + step, delta) - cum_from_base(big, alpha - step, delta)) /
              (2.0 * step);
    out[pb + 1] = (big * u_pow - cum_from_base(big, alpha, delta)) / delta;
    return out;
  }
  std::vector<double> breakpoints() const override { return base_->breakpoints(); }
  bool proportional() const override { return false; }

 private:
  struct Parts {
    Vector base;
    double alpha;
    double delta;
  };
  Parts split(const Vector& th) const {
    const auto pb = static_cast<Eigen::Index>(base_->dim());
    return {th.head(pb), th[pb], th[pb + 1]};
  }
  static double cum_from_base(double big, double alpha, double delta) {
    const double l = std::log1p(delta / alpha * big);
    if (std::abs(alpha - 1.0) < 1e-8) return l / delta;
    return alpha * (-std::expm1((1.0 - alpha) * l)) / ((alpha - 1.0) * delta);
  }
  bool extra_admissible(const Vector& th) const override {
    return base_->admissible(th.head(static_cast<Eigen::Index>(base_->dim())));
  }

  ModelPtr base_;
};

class Fixed final : public HazardModel {
 public:
  Fixed(std::function<double(double)> h0, std::function<double(double)> cum_h0, std::string label)
      : h0_(std::move(h0)), cum_h0_(std::move(cum_h0)), label_(std::move(label)) {}
  std::string id() const override { return label_; }
  std::vector<std::string> param_names() const override { return {}; }
  std::vector<ParamTransform> transforms() const override { return {}; }
  double hazard(double s, const Vector&) const override { return h0_(s); }
  double cum_hazard(double t, const Vector&) const override { return cum_h0_(t); }
  Vector score(double, const Vector&) const override { return Vector(0); }
  Vector cum_score(double, const Vector&) const override { return Vector(0); }
  Matrix info_integral(double, const Vector&) const override { return Matrix(0, 0); }
  bool closed_form_info() const override { return true; }

 private:
  std::function<double(double)> h0_;
  std::function<double(double)> cum_h0_;
  std::string label_;
};

class Proportional final : public HazardModel {
 public:
  explicit Proportional(BaselinePtr baseline) : baseline_(std::move(baseline)) {
    if (!baseline_) throw ModelError("proportional model needs a baseline");
  }
  std::string id() const override { return "proportional(" + baseline_->id() + ")"; }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> names{"theta"};
    for (auto& n : baseline_->param_names()) names.push_back(n);
    return names;
  }
  std::vector<ParamTransform> transforms() const override {
    std::vector<ParamTransform> t{log_transform()};
    for (auto& x : baseline_->transforms()) t.push_back(x);
    return t;
  }
  double hazard(double s, const Vector& th) const override {
    return th[0] * baseline_->h0(s, rest(th));
  }
  double cum_hazard(double t, const Vector& th) const override {
    return th[0] * baseline_->cum_h0(t, rest(th));
  }
  Vector score(double s, const Vector& th) const override {
    Vector out(th.size());
    out[0] = 1.0 / th[0];
    out.tail(th.size() - 1) = baseline_->score0(s, rest(th));
    return out;
  }
  Vector cum_score(double t, const Vector& th) const override {
    Vector out(th.size());
    out[0] = baseline_->cum_h0(t, rest(th));
    out.tail(th.size() - 1) = th[0] * baseline_->cum_score0(t, rest(th));
    return out;
  }
  bool proportional() const override { return true; }

 private:
  static Vector rest(const Vector& th) { return th.tail(th.size() - 1); }
  BaselinePtr baseline_;
};

class PowerBaseline final : public BaselineFamily {
 public:
  std::string id() const override { return "power"; }
  std::vector<std::string> param_names() const override { return {"beta"}; }
  std::vector<ParamTransform> transforms() const override { return {log_transform()}; }
  double h0(double s, const Vector& b) const override { return b[0] * std::pow(s, b[0] - 1.0); }
  double cum_h0(double t, const Vector& b) const override {
    return t <= 0.0 ? 0.0 : std::pow(t, b[0]);
  }
  Vector score0(double s, const Vector& b) const override {
    return vec({1.0 / b[0] + std::log(s)});
  }
  Vector cum_score0(double t, const Vector& b) const override {
    return vec({t <= 0.0 ? 0.0 : std::pow(t, b[0]) * std::log(t)});
  }
};

class ExponentialBaseline final : public BaselineFamily {
 public:
  std::string id() const override { return "exp"; }
  std::vector<std::string> param_names() const override { return {"beta"}; }
  std::vector<ParamTransform> transforms() const override { return {identity_transform()}; }
  double h0(double s, const Vector& b) const override { return std::exp(b[0] * s); }
  double cum_h0(double t, const Vector& b) const override { return t * exp_moment(1, b[0] * t); }
  Vector score0(double s, const Vector&) const override { return vec({s}); }
  Vector cum_score0(double t, const Vector& b) const override {
    return vec({t * t * exp_moment(2, b[0] * t)});
  }
};

class FixedBaseline final : public BaselineFamily {
 public:
  FixedBaseline(std::function<double(double)> h0, std::function<double(double)> cum_h0)
      : h0_(std::move(h0)), cum_h0_(std::move(cum_h0)) {}
  std::string id() const override { return "fixed"; }
  std::vector<std::string> param_names() const override { return {}; }
  std::vector<ParamTransform> transforms() const override { return {}; }
  double h0(double s, const Vector&) const override { return h0_(s); }
  double cum_h0(double t, const Vector&) const override { return cum_h0_(t); }
  Vector score0(double, const Vector&) const override { return Vector(0); }
  Vector cum_score0(double, const Vector&) const override { return Vector(0); }

 private:
  std::function<double(double)> h0_;
  std::function<double(double)> cum_h0_;
};

}  // namespace

double ParamTransform::to_free(double value) const {
  switch (kind) {
    case Kind::Identity:
      return value;
    case Kind::Log:
      return std::log(value);
    case Kind::ShiftedLog:
      return std::log(value - lower);
  }
  return value;
}

double ParamTransform::from_free(double eta) const {
  switch (kind) {
    case Kind::Identity:
      return eta;
    case Kind::Log:
      return std::exp(eta);
    case Kind::ShiftedLog:
      return lower + std::exp(eta);
  }
  return eta;
}

double ParamTransform::derivative(double eta) const {
  return kind == Kind::Identity ? 1.0 : std::exp(eta);
}

bool ParamTransform::admits(double value) const {
  if (!std::isfinite(value)) return false;
  switch (kind) {
    case Kind::Identity:
      return true;
    case Kind::Log:
      return value > 0.0;
    case Kind::ShiftedLog:
      return value > lower;
  }
  return false;
}

bool HazardModel::admissible(const Vector& theta) const {
  const auto t = transforms();
  if (static_cast<std::size_t>(theta.size()) != t.size()) return false;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!t[i].admits(theta[static_cast<Eigen::Index>(i)])) return false;
  return extra_admissible(theta);
}

void HazardModel::check(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim())
    throw ModelError(id() + ": expected " + std::to_string(dim()) + " parameters");
  if (!admissible(theta)) {
    std::ostringstream os;
    os << id() << ": parameter outside admissible region (" << theta.transpose() << ")";
    throw ModelError(os.str());
  }
}

Vector HazardModel::to_free(const Vector& theta) const {
  const auto t = transforms();
  Vector eta(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    eta[i] = t[static_cast<std::size_t>(i)].to_free(theta[i]);
  return eta;
}

Vector HazardModel::from_free(const Vector& eta) const {
  const auto t = transforms();
  Vector theta(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    theta[i] = t[static_cast<std::size_t>(i)].from_free(eta[i]);
  return theta;
}

Vector HazardModel::free_jacobian(const Vector& eta) const {
  const auto t = transforms();
  Vector d(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    d[i] = t[static_cast<std::size_t>(i)].derivative(eta[i]);
  return d;
}

Matrix HazardModel::info_integral(double t, const Vector& theta) const {
  const auto p = static_cast<Eigen::Index>(dim());
  Matrix m = Matrix::Zero(p, p);
  if (t <= 0.0) return m;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      m(i, j) = quad::integrate_singular(
          [&](double s) {
            const double h = hazard(s, theta);
            if (h == 0.0) return 0.0;
            const Vector psi = score(s, theta);
            return psi[i] * psi[j] * h;
          },
          0.0, t, breakpoints(), 1e-11);
      m(j, i) = m(i, j);
    }
  }
  return m;
}

double HazardModel::inverse_cum_hazard(double target, const Vector& theta) const {
  if (target <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (cum_hazard(hi, theta) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cum_hazard(mid, theta) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ModelPtr exponential_model() { return std::make_shared<Exponential>(); }
ModelPtr weibull_model() { return std::make_shared<Weibull>(); }
ModelPtr gompertz_model() { return std::make_shared<Gompertz>(); }
ModelPtr simple_frailty_model(double epsilon) { return std::make_shared<SimpleFrailty>(epsilon); }
ModelPtr simple_frailty_model(const SurvivalSample& sample) {
  return simple_frailty_model(1.0 / (2.0 * sample.max_exit_time()));
}
ModelPtr gamma_model() { return std::make_shared<Gamma>(); }
ModelPtr delayed_power_model(double onset) { return std::make_shared<DelayedPower>(onset); }
ModelPtr compound_poisson_frailty_model(ModelPtr base) {
  return std::make_shared<CompoundPoissonFrailty>(std::move(base));
}

ModelPtr fixed_model(std::function<double(double)> h0, std::function<double(double)> cum_h0,
                     std::string label) {
  return std::make_shared<Fixed>(std::move(h0), std::move(cum_h0), std::move(label));
}

ModelPtr fixed_model_from_table(std::vector<double> times, std::vector<double> cum_hazard,
                                std::string label) {
  if (times.size() != cum_hazard.size() || times.empty())
    throw ModelError("fixed hazard table: need matching non-empty columns");
  if (times.front() > 0.0) {
    times.insert(times.begin(), 0.0);
    cum_hazard.insert(cum_hazard.begin(), 0.0);
  }
  if (times.size() < 2) throw ModelError("fixed hazard table: need at least one interval");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ModelError("fixed hazard table: times must increase");
    if (cum_hazard[i] < cum_hazard[i - 1])
      throw ModelError("fixed hazard table: cumulative hazard must be non-decreasing");
  }
  auto segment = [times](double t) {
    auto it = std::lower_bound(times.begin() + 1, times.end(), t);
    if (it == times.end()) --it;
    return static_cast<std::size_t>(it - times.begin()) - 1;
  };
  auto slope = [times, cum_hazard](std::size_t i) {
    return (cum_hazard[i + 1] - cum_hazard[i]) / (times[i + 1] - times[i]);
  };
  auto h0 = [segment, slope](double s) { return slope(segment(s)); };
  auto big = [segment, slope, times, cum_hazard](double t) {
    if (t <= 0.0) return 0.0;
    const std::size_t i = segment(t);
    return cum_hazard[i] + slope(i) * (t - times[i]);
  };
  return fixed_model(h0, big, std::move(label));
}

BaselinePtr power_baseline() { return std::make_shared<PowerBaseline>(); }
BaselinePtr exponential_baseline() { return std::make_shared<ExponentialBaseline>(); }
BaselinePtr fixed_baseline(std::function<double(double)> h0, std::function<double(double)> cum_h0) {
  return std::make_shared<FixedBaseline>(std::move(h0), std::move(cum_h0));
}
ModelPtr proportional_model(BaselinePtr baseline) {
  return std::make_shared<Proportional>(std::move(baseline));
}

ModelPtr make_model(const std::string& id, double max_exit_time) {
  if (id == "exponential") return exponential_model();
  if (id == "weibull") return weibull_model();
  if (id == "gompertz") return gompertz_model();
  if (id == "frailty") return simple_frailty_model(1.0 / (2.0 * max_exit_time));
  if (id == "gamma") return gamma_model();
  if (id == "cpfrailty") return compound_poisson_frailty_model(exponential_model());
  if (id == "cpfrailty:weibull") return compound_poisson_frailty_model(weibull_model());
  if (id.rfind("fixed:", 0) == 0) {
    const std::string path = id.substr(6);
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open fixed hazard table " + path);
    std::vector<double> t;
    std::vector<double> h;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      double a = 0.0;
      double b = 0.0;
      if (!(row >> a >> b)) {
        if (t.empty() && line_no == 1) continue;  // header
        throw ModelError(path + ": line " + std::to_string(line_no) + ": expected 't,H0'");
      }
      t.push_back(a);
      h.push_back(b);
    }
    return fixed_model_from_table(std::move(t), std::move(h), "fixed:" + path);
  }
  throw ModelError("unknown model '" + id + "'");
}

ModelPtr make_model(const std::string& id, const SurvivalSample& sample) {
  return make_model(id, sample.max_exit_time());
}

}  // namespace nlh
