#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/uniform.hpp>

#include "errors.hpp"
#include "numerics.hpp"

namespace infocredit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

/// A continuous law on the real line: density, distribution function and
/// quantiles. Used both for default times and for market factors.
class Distribution {
public:
  static Distribution exponential(double rate) {
    if (!(rate > 0.0)) throw InputError("exponential: rate must be > 0");
    return from_boost(boost::math::exponential_distribution<>(rate), {0.0, kInf},
                      "exponential(rate=" + std::to_string(rate) + ")");
  }
  static Distribution gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw InputError("gamma: shape and rate must be > 0");
    return from_boost(boost::math::gamma_distribution<>(shape, 1.0 / rate), {0.0, kInf},
                      "gamma(shape=" + std::to_string(shape) + ", rate=" + std::to_string(rate) + ")");
  }
  static Distribution lognormal(double mu, double s) {
    if (!(s > 0.0)) throw InputError("lognormal: s must be > 0");
    return from_boost(boost::math::lognormal_distribution<>(mu, s), {0.0, kInf},
                      "lognormal(mu=" + std::to_string(mu) + ", s=" + std::to_string(s) + ")");
  }
  static Distribution normal(double mean, double sd) {
    if (!(sd > 0.0)) throw InputError("normal: sd must be > 0");
    return from_boost(boost::math::normal_distribution<>(mean, sd), {-kInf, kInf},
                      "normal(mean=" + std::to_string(mean) + ", sd=" + std::to_string(sd) + ")");
  }
  static Distribution uniform(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InputError("uniform: require finite lo < hi");
    return from_boost(boost::math::uniform_distribution<>(lo, hi), {lo, hi},
                      "uniform(lo=" + std::to_string(lo) + ", hi=" + std::to_string(hi) + ")");
  }

  double pdf(double x) const { return support_.contains(x) && std::isfinite(x) ? pdf_(x) : 0.0; }
  double cdf(double x) const { return x <= support_.lo ? 0.0 : x >= support_.hi ? 1.0 : cdf_(x); }
  /// 1 - cdf, evaluated without cancellation.
  double ccdf(double x) const { return x <= support_.lo ? 1.0 : x >= support_.hi ? 0.0 : ccdf_(x); }
  /// x with cdf(x) = q.
  double quantile(double q) const { return q <= 0.0 ? support_.lo : q >= 1.0 ? support_.hi : quantile_(q); }
  /// x with ccdf(x) = q.
  double upper_quantile(double q) const { return q <= 0.0 ? support_.hi : q >= 1.0 ? support_.lo : upper_quantile_(q); }

  Interval support() const { return support_; }
  const std::string& name() const { return name_; }

private:
  template <class D>
  static Distribution from_boost(D dist, Interval support, std::string name) {
    Distribution out;
    out.pdf_ = [dist](double x) { return boost::math::pdf(dist, x); };
    out.cdf_ = [dist](double x) { return boost::math::cdf(dist, x); };
    out.ccdf_ = [dist](double x) { return boost::math::cdf(boost::math::complement(dist, x)); };
    out.quantile_ = [dist](double q) { return boost::math::quantile(dist, q); };
    out.upper_quantile_ = [dist](double q) { return boost::math::quantile(boost::math::complement(dist, q)); };
    out.support_ = support;
    out.name_ = std::move(name);
    return out;
  }

  std::function<double(double)> pdf_, cdf_, ccdf_, quantile_, upper_quantile_;
  Interval support_;
  std::string name_;
};

enum class Monotonicity { increasing, decreasing };

/// Monotone map f from market factor to default time, stored together with
/// its inverse phi = f^{-1} (time -> factor).
class DefaultMap {
public:
  using Fn = std::function<double(double)>;

  /// phi(u) = exp(-a u)
  static DefaultMap exp_decay(double a) {
    if (!(a > 0.0)) throw InputError("exp_decay: a must be > 0");
    return DefaultMap("exp_decay(" + std::to_string(a) + ")", [a](double u) { return std::exp(-a * u); },
                      [a](double x) { return -std::log(x) / a; }, {-kInf, kInf}, Monotonicity::decreasing,
                      [a](double u) { return -a * std::exp(-a * u); });
  }
  /// phi(u) = exp(a u)
  static DefaultMap exp_growth(double a) {
    if (!(a > 0.0)) throw InputError("exp_growth: a must be > 0");
    return DefaultMap("exp_growth(" + std::to_string(a) + ")", [a](double u) { return std::exp(a * u); },
                      [a](double x) { return std::log(x) / a; }, {-kInf, kInf}, Monotonicity::increasing,
                      [a](double u) { return a * std::exp(a * u); });
  }
  /// phi(u) = a + b u
  static DefaultMap linear(double a, double b) {
    if (b == 0.0 || !std::isfinite(a) || !std::isfinite(b)) throw InputError("linear: require finite a and b != 0");
    return DefaultMap("linear(" + std::to_string(a) + ", " + std::to_string(b) + ")",
                      [a, b](double u) { return a + b * u; }, [a, b](double x) { return (x - a) / b; },
                      {-kInf, kInf}, b > 0.0 ? Monotonicity::increasing : Monotonicity::decreasing,
                      [b](double) { return b; });
  }
  /// phi(u) = a u^b on u > 0
  static DefaultMap power(double a, double b) {
    if (a == 0.0 || b == 0.0 || !std::isfinite(a) || !std::isfinite(b))
      throw InputError("power: require finite nonzero a and b");
    return DefaultMap("power(" + std::to_string(a) + ", " + std::to_string(b) + ")",
                      [a, b](double u) { return a * std::pow(u, b); },
                      [a, b](double x) { return std::pow(x / a, 1.0 / b); }, {0.0, kInf},
                      a * b > 0.0 ? Monotonicity::increasing : Monotonicity::decreasing,
                      [a, b](double u) { return a * b * std::pow(u, b - 1.0); });
  }
  /// User-supplied pair. Without `dphi` the derivative is taken by central
  /// differences with step 1e-6 * max(1, |u|).
  static DefaultMap custom(std::string name, Fn phi, Fn f, Interval time_domain, Monotonicity direction,
                           Fn dphi = {}) {
    if (!phi || !f) throw InputError("custom map: phi and f are required");
    return DefaultMap(std::move(name), std::move(phi), std::move(f), time_domain, direction, std::move(dphi));
  }

  double phi(double u) const { return phi_(u); }
  double f(double x) const { return f_(x); }
  double dphi(double u) const {
    if (dphi_) return dphi_(u);
    const double h = 1e-6 * std::max(1.0, std::abs(u));
    return (phi_(u + h) - phi_(u - h)) / (2.0 * h);
  }
  bool has_analytic_derivative() const { return static_cast<bool>(dphi_); }

  Monotonicity direction() const { return direction_; }
  bool decreasing() const { return direction_ == Monotonicity::decreasing; }
  Interval time_domain() const { return time_domain_; }

  /// phi over the whole time domain, as an ordered interval.
  Interval factor_image() const { return image_of(time_domain_); }

  Interval image_of(Interval times) const {
    const double a = phi_(times.lo);
    const double b = phi_(times.hi);
    return a <= b ? Interval{a, b} : Interval{b, a};
  }

  /// Times u with phi(u) in the given factor interval (ordered).
  Interval preimage_of(Interval factors) const {
    const double a = f_(factors.lo);
    const double b = f_(factors.hi);
    return a <= b ? Interval{a, b} : Interval{b, a};
  }

  /// Checks strict monotonicity in the declared direction and f(phi(u)) = u
  /// on a 1000-point grid over `times`.
  void verify(Interval times) const {
    const Interval span{std::max(times.lo, time_domain_.lo), std::min(times.hi, time_domain_.hi)};
    if (!span.finite() || !(span.lo < span.hi)) throw InputError("default map " + name_ + ": empty verification range");
    constexpr int n = 1000;
    double prev = phi_(span.lo);
    for (int i = 0; i < n; ++i) {
      // Stay off a possibly open endpoint of the domain.
      double u = span.lo + (span.hi - span.lo) * (i + 0.5) / n;
      if (i == n - 1) u = span.hi;
      const double x = phi_(u);
      if (!std::isfinite(x)) throw InputError("default map " + name_ + ": phi not finite at u=" + std::to_string(u));
      if (i > 0 || span.lo > time_domain_.lo) {
        const bool ok = decreasing() ? x < prev : x > prev;
        if (!ok) throw InputError("default map " + name_ + ": phi not strictly monotone near u=" + std::to_string(u));
      }
      if (std::abs(f_(x) - u) > 1e-9 * std::max(1.0, std::abs(u)))
        throw InputError("default map " + name_ + ": f(phi(u)) != u at u=" + std::to_string(u));
      prev = x;
    }
  }

  const std::string& name() const { return name_; }

private:
  DefaultMap(std::string name, Fn phi, Fn f, Interval domain, Monotonicity direction, Fn dphi)
      : name_(std::move(name)), phi_(std::move(phi)), f_(std::move(f)), dphi_(std::move(dphi)),
        time_domain_(domain), direction_(direction) {}

  std::string name_;
  Fn phi_, f_, dphi_;
  Interval time_domain_;
  Monotonicity direction_;
};

/// A priori density p(u) of the default time, with the truncated domain that
/// carries all but `tail_mass` of the prior.
class PriorDensity {
public:
  static PriorDensity exponential(double rate, const Tolerances& tol = {}) {
    return of_default_time(Distribution::exponential(rate), tol);
  }
  static PriorDensity gamma(double shape, double rate, const Tolerances& tol = {}) {
    return of_default_time(Distribution::gamma(shape, rate), tol);
  }
  static PriorDensity lognormal(double mu, double s, const Tolerances& tol = {}) {
    return of_default_time(Distribution::lognormal(mu, s), tol);
  }

  /// Prior given directly as the law of the default time.
  static PriorDensity of_default_time(const Distribution& law, const Tolerances& tol = {}) {
    tol.validate();
    PriorDensity out;
    out.name_ = law.name();
    out.density_ = [law](double u) { return law.pdf(u); };
    out.survival_ = [law](double u) { return law.ccdf(u); };
    out.quantile_ = [law](double q) { return law.quantile(q); };
    out.upper_quantile_ = [law](double q) { return law.upper_quantile(q); };
    out.support_ = law.support();
    out.finish(tol);
    return out;
  }

  /// Prior given as the law rho_0 of the factor X; converted through
  /// p(u) = rho_0(phi(u)) |phi'(u)|. The factor mass outside the image of phi
  /// must not exceed tail_mass.
  static PriorDensity of_factor(const Distribution& law, const DefaultMap& map, const Tolerances& tol = {}) {
    tol.validate();
    const Interval image = map.factor_image();
    const double outside = law.cdf(image.lo) + law.ccdf(image.hi);
    if (outside > tol.tail_mass)
      throw InputError("factor prior " + law.name() + " puts mass " + std::to_string(outside) +
                       " outside the range of phi for map " + map.name());

    PriorDensity out;
    out.name_ = law.name() + " via " + map.name();
    const Interval domain = map.time_domain();
    out.density_ = [law, map, domain](double u) {
      if (!(domain.lo < u && u < domain.hi)) return 0.0;
      return law.pdf(map.phi(u)) * std::abs(map.dphi(u));
    };
    const Interval xs{std::max(law.support().lo, image.lo), std::min(law.support().hi, image.hi)};
    auto clamp_x = [xs](double x) { return std::clamp(x, xs.lo, xs.hi); };
    if (map.decreasing()) {
      out.survival_ = [law, map, domain](double u) {
        if (u <= domain.lo) return 1.0;
        if (u >= domain.hi) return 0.0;
        return law.cdf(map.phi(u));
      };
      out.quantile_ = [law, map, clamp_x](double q) { return map.f(clamp_x(law.upper_quantile(q))); };
      out.upper_quantile_ = [law, map, clamp_x](double q) { return map.f(clamp_x(law.quantile(q))); };
    } else {
      out.survival_ = [law, map, domain](double u) {
        if (u <= domain.lo) return 1.0;
        if (u >= domain.hi) return 0.0;
        return law.ccdf(map.phi(u));
      };
      out.quantile_ = [law, map, clamp_x](double q) { return map.f(clamp_x(law.quantile(q))); };
      out.upper_quantile_ = [law, map, clamp_x](double q) { return map.f(clamp_x(law.upper_quantile(q))); };
    }
    out.support_ = map.preimage_of(xs);
    out.finish(tol);
    return out;
  }

  /// p(u); zero outside the support.
  double density(double u) const { return support_.contains(u) ? density_(u) : 0.0; }
  /// Q(tau > u).
  double survival(double u) const { return survival_(u); }
  /// u with Q(tau <= u) = q.
  double quantile(double q) const { return quantile_(q); }
  /// u with Q(tau > u) = q.
  double upper_quantile(double q) const { return upper_quantile_(q); }

  Interval support() const { return support_; }
  Interval truncation() const { return truncation_; }
  const std::string& name() const { return name_; }

private:
  void finish(const Tolerances& tol) {
    truncation_ = {std::max(support_.lo, quantile_(0.5 * tol.tail_mass)),
                   std::min(support_.hi, upper_quantile_(0.5 * tol.tail_mass))};
    if (!truncation_.finite() || !(truncation_.lo < truncation_.hi))
      throw InputError("prior " + name_ + ": cannot truncate to a finite interval");
  }

  std::string name_;
  std::function<double(double)> density_, survival_, quantile_, upper_quantile_;
  Interval support_;
  Interval truncation_;
};

/// Deterministic default-free discount curve P_{0t}.
class TermStructure {
public:
  /// P_{0t} = exp(-r t)
  static TermStructure flat(double rate) {
    if (!std::isfinite(rate) || rate < 0.0) throw InputError("flat curve: rate must be finite and >= 0");
    TermStructure out;
    out.discount_ = [rate](double t) { return std::exp(-rate * t); };
    out.short_rate_ = [rate](double) { return rate; };
    out.flat_rate_ = rate;
    return out;
  }

  /// Log-linear interpolation between (t, P_{0t}) nodes; flat forward beyond
  /// the last node. A node at t = 0 with P = 1 is implied.
  static TermStructure from_table(std::vector<std::pair<double, double>> nodes) {
    if (nodes.empty() || nodes.front().first != 0.0) nodes.insert(nodes.begin(), {0.0, 1.0});
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto [t, p] = nodes[i];
      if (!(p > 0.0) || !(p <= 1.0) || !std::isfinite(t)) throw InputError("curve table: need finite t and P in (0, 1]");
      if (i == 0 && p != 1.0) throw InputError("curve table: P_00 must equal 1");
      if (i > 0 && !(t > nodes[i - 1].first)) throw InputError("curve table: times must be strictly increasing");
      if (i > 0 && p > nodes[i - 1].second) throw InputError("curve table: discount factors must be nonincreasing");
    }
    std::vector<double> times, logs;
    for (const auto& [t, p] : nodes) {
      times.push_back(t);
      logs.push_back(std::log(p));
    }
    auto locate = [times](double t) {
      const auto it = std::upper_bound(times.begin(), times.end(), t);
      return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - times.begin() - 1, 0, times.size() - 2));
    };
    auto forward = [times, logs](std::size_t i) {
      return -(logs[i + 1] - logs[i]) / (times[i + 1] - times[i]);
    };
    TermStructure out;
    if (times.size() == 1) return flat(0.0);
    out.discount_ = [times, logs, locate, forward](double t) {
      if (t <= 0.0) return 1.0;
      const std::size_t i = locate(t);
      return std::exp(logs[i] - forward(i) * (t - times[i]));
    };
    out.short_rate_ = [locate, forward](double t) { return forward(locate(std::max(t, 0.0))); };
    out.table_ = std::move(nodes);
    return out;
  }

  double discount(double t) const { return discount_(t); }
  /// P_{tT} = P_{0T} / P_{0t}
  double forward_discount(double t, double T) const { return discount_(T) / discount_(t); }
  /// r_t = -d/dt ln P_{0t}
  double short_rate(double t) const { return short_rate_(t); }

  std::optional<double> flat_rate() const { return flat_rate_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

private:
  std::function<double(double)> discount_, short_rate_;
  std::optional<double> flat_rate_;
  std::vector<std::pair<double, double>> table_;
};

/// Information-based single-name model: default time with prior p, factor
/// X = phi(tau), and information process xi_t = sigma t X + B_t.
class InfoModel {
public:
  InfoModel(double sigma, PriorDensity prior, DefaultMap map, Tolerances tol = {})
      : sigma_(sigma), prior_(std::move(prior)), map_(std::move(map)), tol_(tol) {
    tol_.validate();
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw InputError("information flow rate must be finite and >= 0");
    map_.verify(prior_.truncation());
    phi_range_ = map_.image_of(prior_.truncation());
  }

  double sigma() const { return sigma_; }
  const PriorDensity& prior() const { return prior_; }
  const DefaultMap& map() const { return map_; }
  const Tolerances& tolerances() const { return tol_; }
  /// Range of phi over the truncated prior domain.
  Interval phi_range() const { return phi_range_; }

  InfoModel with_sigma(double sigma) const {
    InfoModel out = *this;
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("information flow rate must be finite and >= 0");
    out.sigma_ = sigma;
    return out;
  }

private:
  double sigma_;
  PriorDensity prior_;
  DefaultMap map_;
  Tolerances tol_;
  Interval phi_range_;
};

/// Market information at time t: observed xi_t and the survival indicator.
struct InformationState {
  double t = 0.0;
  double xi = 0.0;
  bool survived = true;
};

namespace detail {

inline void check_state(const InformationState& state) {
  if (!(state.t >= 0.0) || !std::isfinite(state.t)) throw InputError("information state: t must be finite and >= 0");
  if (!std::isfinite(state.xi)) throw InputError("information state: xi must be finite");
}

/// exp(sigma phi xi - sigma^2 phi^2 t / 2 - shift), with the shift equal to
/// the maximum exponent over the truncated prior so nothing overflows. At
/// t = 0 the observation carries no information (xi_0 = 0 identically).
class Kernel {
public:
  Kernel(const InfoModel& model, const InformationState& state) {
    check_state(state);
    if (state.t > 0.0 && model.sigma() > 0.0) {
      linear_ = model.sigma() * state.xi;
      quadratic_ = 0.5 * model.sigma() * model.sigma() * state.t;
      const Interval r = model.phi_range();
      const double peak = std::clamp(state.xi / (model.sigma() * state.t), r.lo, r.hi);
      shift_ = log_kernel(peak);
    }
  }

  double log_kernel(double phi) const { return linear_ * phi - quadratic_ * phi * phi; }
  double operator()(double phi) const { return std::exp(log_kernel(phi) - shift_); }
  double shift() const { return shift_; }

private:
  double linear_ = 0.0;
  double quadratic_ = 0.0;
  double shift_ = 0.0;
};

inline Interval clip(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

/// Shifted integral of p(v) K(phi(v)) over [lo, hi] intersected with the truncation.
inline double posterior_mass(const InfoModel& model, const Kernel& kernel, double lo, double hi) {
  const Interval r = clip({lo, hi}, model.prior().truncation());
  if (!(r.lo < r.hi)) return 0.0;
  const auto& prior = model.prior();
  const auto& map = model.map();
  return integrate([&](double v) { return prior.density(v) * kernel(map.phi(v)); }, r.lo, r.hi, model.tolerances());
}

/// Shifted integrals of p K and of phi p K over [lo, hi] (same nodes).
inline std::array<double, 2> posterior_factor_moments(const InfoModel& model, const Kernel& kernel, double lo,
                                                      double hi) {
  const Interval r = clip({lo, hi}, model.prior().truncation());
  if (!(r.lo < r.hi)) return {0.0, 0.0};
  const auto& prior = model.prior();
  const auto& map = model.map();
  return integrate(
      [&](double v) {
        const double x = map.phi(v);
        const double w = prior.density(v) * kernel(x);
        return std::array<double, 2>{w, w * x};
      },
      r.lo, r.hi, model.tolerances());
}

} // namespace detail

/// Value of F_tu = ∫ p(v) 1{v > u} exp(sigma phi(v) xi_t - sigma^2 phi(v)^2 t / 2) dv,
/// held as `scaled * exp(log_shift)`.
struct Functional {
  double scaled = 0.0;
  double log_shift = 0.0;
  /// Set when u lies beyond the truncated prior and the value is reported as 0.
  bool underflow = false;

  double value() const { return scaled * std::exp(log_shift); }
  double log_value() const { return std::log(scaled) + log_shift; }
};

inline Functional f_functional(const InfoModel& model, const InformationState& state, double u) {
  if (!std::isfinite(u)) throw InputError("f_functional: u must be finite");
  const detail::Kernel kernel(model, state);
  if (u >= model.prior().truncation().hi) return {0.0, kernel.shift(), true};
  return {detail::posterior_mass(model, kernel, u, kInf), kernel.shift(), false};
}

/// Posterior probability of survival to u given survival to t and xi_t:
/// F_tu / F_tt.
inline double posterior_survival(const InfoModel& model, const InformationState& state, double u) {
  if (!state.survived) throw InputError("posterior_survival: undefined after default");
  if (!(u >= state.t)) throw InputError("posterior_survival: require u >= t");
  const detail::Kernel kernel(model, state);
  if (u == state.t) {
    if (detail::posterior_mass(model, kernel, state.t, kInf) == 0.0)
      throw DegenerateError("posterior_survival: no posterior mass beyond t");
    return 1.0;
  }
  // F_tt is split at u so that the ratio is formed from the same panels.
  const double beyond = detail::posterior_mass(model, kernel, u, kInf);
  const double between = detail::posterior_mass(model, kernel, state.t, u);
  const double total = beyond + between;
  if (!(total > 0.0)) throw DegenerateError("posterior_survival: no posterior mass beyond t");
  return std::clamp(beyond / total, 0.0, 1.0);
}

/// Factor density rho_0(x) implied by the default-time prior: p(f(x)) / |phi'(f(x))|.
inline double factor_prior_density(const InfoModel& model, double x) {
  const double u = model.map().f(x);
  if (!std::isfinite(u)) return 0.0;
  const double p = model.prior().density(u);
  if (p == 0.0) return 0.0;
  return p / std::abs(model.map().dphi(u));
}

/// Bayes posterior density rho_t(x) of the factor X given xi_t (no
/// conditioning on survival).
inline double conditional_density(const InfoModel& model, const InformationState& state, double x) {
  const double prior_x = factor_prior_density(model, x);
  if (prior_x == 0.0) return 0.0;
  const detail::Kernel kernel(model, state);
  const double mass = detail::posterior_mass(model, kernel, -kInf, kInf);
  if (!(mass > 0.0)) throw DegenerateError("conditional_density: posterior mass underflows");
  return shifted_exp_ratio({std::log(prior_x) + kernel.log_kernel(x)}, {kernel.shift() + std::log(mass)});
}

/// E[X | xi_t, tau > u]: posterior mean of the factor restricted to {f(X) > u}.
inline double posterior_factor_mean(const InfoModel& model, const InformationState& state, double u) {
  const detail::Kernel kernel(model, state);
  const auto [mass, first] = detail::posterior_factor_moments(model, kernel, u, kInf);
  if (!(mass > 0.0)) throw DegenerateError("posterior_factor_mean: no posterior mass beyond u");
  return first / mass;
}

} // namespace infocredit
