#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bond.hpp"

namespace infocredit {

/// European call, expiring at t, on the zero-recovery bond maturing at T.
struct OptionSpec {
  double strike = 0.0;
  double expiry = 1.0;
  double bond_maturity = 5.0;

  void validate() const {
    if (!(expiry > 0.0 && expiry < bond_maturity) || !std::isfinite(bond_maturity))
      throw InputError("option: require 0 < expiry < bond maturity");
    if (!(strike >= 0.0) || !std::isfinite(strike)) throw InputError("option: strike must be finite and >= 0");
  }
};

/// Why no interior critical value exists.
class CriticalValueError : public std::runtime_error {
public:
  enum class Kind {
    never_in_the_money,   // K >= P_tT: B(t, y) < K for every y
    always_in_the_money,  // K <= 0, or B(t, .) constant above K
  };
  CriticalValueError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// B(t, y): time-t price of the bond given survival and xi_t = y.
inline double bond_value_function(const InfoModel& model, const TermStructure& curve, double t, double T, double y) {
  if (!(t < T)) throw InputError("bond_value_function: require t < T");
  return curve.forward_discount(t, T) * posterior_survival(model, {t, y, true}, T);
}

/// Joint density of (tau, xi_t) at (u, y).
inline double joint_density(const InfoModel& model, double t, double u, double y) {
  if (!(t > 0.0)) throw InputError("joint_density: require t > 0");
  const double p = model.prior().density(u);
  if (p == 0.0) return 0.0;
  const double z = (y - model.sigma() * model.map().phi(u) * t) / std::sqrt(t);
  return p * normal_pdf(z) / std::sqrt(t);
}

/// Price density A_0(u, y) of the security paying at t on {tau > u, xi_t in dy}.
inline double arrow_debreu(const InfoModel& model, const TermStructure& curve, double t, double u, double y) {
  if (!(t > 0.0)) throw InputError("arrow_debreu: require t > 0");
  const Interval r = detail::clip({u, kInf}, model.prior().truncation());
  if (!(r.lo < r.hi)) return 0.0;
  const double s = model.sigma() * t;
  const double root_t = std::sqrt(t);
  const auto& prior = model.prior();
  const auto& map = model.map();
  const double mass = integrate([&](double x) { return prior.density(x) * normal_pdf((y - s * map.phi(x)) / root_t); },
                                r.lo, r.hi, model.tolerances());
  return curve.discount(t) * mass / root_t;
}

/// Critical information level where B(t, y) = K: y* for decreasing phi
/// (in the money below), y-dagger for increasing phi (in the money above).
inline double critical_value(const InfoModel& model, const TermStructure& curve, const OptionSpec& spec) {
  spec.validate();
  const double t = spec.expiry;
  const double T = spec.bond_maturity;
  const double riskless = curve.forward_discount(t, T);
  if (spec.strike >= riskless)
    throw CriticalValueError(CriticalValueError::Kind::never_in_the_money, "critical_value: strike >= P_tT");
  if (spec.strike <= 0.0)
    throw CriticalValueError(CriticalValueError::Kind::always_in_the_money, "critical_value: strike <= 0");
  if (model.sigma() == 0.0) {
    const bool above = bond_value_function(model, curve, t, T, 0.0) > spec.strike;
    throw CriticalValueError(above ? CriticalValueError::Kind::always_in_the_money
                                   : CriticalValueError::Kind::never_in_the_money,
                             "critical_value: B(t, y) does not depend on y when sigma = 0");
  }

  auto excess = [&](double y) { return bond_value_function(model, curve, t, T, y) - spec.strike; };
  double half_width = 10.0 * std::sqrt(t) * (1.0 + model.sigma());
  double lo = -half_width;
  double hi = half_width;
  double f_lo = excess(lo);
  double f_hi = excess(hi);
  while ((f_lo < 0.0) == (f_hi < 0.0) && f_lo != 0.0 && f_hi != 0.0) {
    if (hi - lo > 1e6) throw NumericalError("critical_value: no sign change of B(t, y) - K within |y| <= 5e5");
    half_width *= 2.0;
    lo = -half_width;
    hi = half_width;
    f_lo = excess(lo);
    f_hi = excess(hi);
  }
  return find_root(excess, lo, hi, model.tolerances());
}

/// Call price from the critical value and normal CDFs:
///   C_0 = P_0T ∫_T p(u) N(d(u)) du - P_0t K ∫_t p(u) N(d(u)) du,
/// d(u) = (y* - sigma phi(u) t)/sqrt(t) for decreasing phi and
/// (sigma phi(u) t - y-dagger)/sqrt(t) for increasing phi.
inline double call_price(const InfoModel& model, const TermStructure& curve, const OptionSpec& spec) {
  spec.validate();
  const double t = spec.expiry;
  const double T = spec.bond_maturity;
  const double K = spec.strike;
  const double p0t = curve.discount(t);
  const double p0T = curve.discount(T);
  if (K >= curve.forward_discount(t, T)) return 0.0;

  const auto& prior = model.prior();
  const auto& map = model.map();
  const auto& tol = model.tolerances();
  const Interval trunc = prior.truncation();
  auto prior_mass = [&](double a, double b) {
    const Interval r = detail::clip({a, b}, trunc);
    return r.lo < r.hi ? integrate([&](double u) { return prior.density(u); }, r.lo, r.hi, tol) : 0.0;
  };

  if (K == 0.0 || model.sigma() == 0.0) {
    // N(.) -> 1 in both integrals (K = 0), or B(t, y) is deterministic (sigma = 0).
    const double beyond = prior_mass(T, kInf);
    const double alive = beyond + prior_mass(t, T);
    return std::max(0.0, p0T * beyond - p0t * K * alive);
  }

  const double y_crit = critical_value(model, curve, spec);
  const double s = model.sigma() * t;
  const double root_t = std::sqrt(t);
  const bool decreasing = map.decreasing();
  auto weighted = [&](double a, double b) {
    const Interval r = detail::clip({a, b}, trunc);
    if (!(r.lo < r.hi)) return 0.0;
    return integrate(
        [&](double u) {
          const double d = decreasing ? (y_crit - s * map.phi(u)) / root_t : (s * map.phi(u) - y_crit) / root_t;
          return prior.density(u) * normal_cdf(d);
        },
        r.lo, r.hi, tol);
  };
  const double beyond = weighted(T, kInf);
  const double alive = beyond + weighted(t, T);
  return std::max(0.0, p0T * beyond - p0t * K * alive);
}

/// Independent check of call_price: nested quadrature of
///   C_0 = P_0t ∫ dy (P_tT ∫_T p(u) n_t(y - sigma phi(u) t) du - K ∫_t p(u) n_t(...) du)^+
/// with n_t the N(0, t) density. No critical value is used.
inline double call_price_oracle(const InfoModel& model, const TermStructure& curve, const OptionSpec& spec) {
  spec.validate();
  const double t = spec.expiry;
  const double T = spec.bond_maturity;
  const double K = spec.strike;
  const double riskless = curve.forward_discount(t, T);
  const double s = model.sigma() * t;
  const double root_t = std::sqrt(t);
  const auto& prior = model.prior();
  const auto& map = model.map();
  const auto& tol = model.tolerances();
  const Interval trunc = prior.truncation();
  const Interval alive = detail::clip({t, kInf}, trunc);
  if (!(alive.lo < alive.hi)) return 0.0;
  const double split = std::clamp(T, alive.lo, alive.hi);

  auto piecewise = [&](auto&& fn, std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    return integrate(fn, std::span<const double>(cuts), tol);
  };

  // For fixed y the u-integrand peaks where s phi(u) = y, which is narrow
  // when phi is steep; cut there and a few sd either side.
  const Interval image = map.image_of(alive);
  auto inner = [&](double y) {
    auto density = [&](double u) { return prior.density(u) * normal_pdf((y - s * map.phi(u)) / root_t) / root_t; };
    std::vector<double> before_cuts{alive.lo, split}, after_cuts{split, alive.hi};
    if (s > 0.0)
      for (double k : {-6.0, -2.0, 0.0, 2.0, 6.0}) {
        const double x = (y + k * root_t) / s;
        if (!(x > image.lo && x < image.hi)) continue;
        const double u = map.f(x);
        if (u > alive.lo && u < split) before_cuts.push_back(u);
        if (u > split && u < alive.hi) after_cuts.push_back(u);
      }
    const double before = split > alive.lo ? piecewise(density, before_cuts) : 0.0;
    const double after = alive.hi > split ? piecewise(density, after_cuts) : 0.0;
    return std::max(0.0, riskless * after - K * (before + after));
  };

  // xi_t given tau = u is N(sigma phi(u) t, t). Deep out-of-the-money prices
  // live in the Gaussian tails, so go out to where the normal density
  // underflows rather than a fixed handful of sd.
  const Interval phis = model.phi_range();
  const double c_lo = std::min(s * phis.lo, s * phis.hi);
  const double c_hi = std::max(s * phis.lo, s * phis.hi);
  const double y_lo = c_lo - 38.0 * root_t;
  const double y_hi = c_hi + 38.0 * root_t;
  // With a steep phi the range is huge and the mass sits in a corner; split
  // it at the images of prior quantiles so no panel straddles all of it.
  std::vector<double> cuts{y_lo, y_hi};
  for (double k : {6.0, 12.0, 20.0, 28.0}) {
    cuts.push_back(c_lo - k * root_t);
    cuts.push_back(c_hi + k * root_t);
  }
  for (double q : {1e-9, 1e-6, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.0 - 1e-6}) {
    const double u = std::clamp(prior.quantile(q), trunc.lo, trunc.hi);
    const double c = s * map.phi(u);
    for (double y : {c - 6.0 * root_t, c, c + 6.0 * root_t})
      if (y > y_lo && y < y_hi) cuts.push_back(y);
  }
  return curve.discount(t) * piecewise(inner, cuts);
}

/// Information flow rate that reproduces an observed call price.
///
/// The price is tabulated on `grid_points` equally spaced rates in
/// [0, sigma_max] and must be nondecreasing there; the root is then polished
/// inside the bracketing grid cell.
inline double implied_sigma(const InfoModel& model, const TermStructure& curve, const OptionSpec& spec,
                            double observed_price, double sigma_max = 2.0, std::size_t grid_points = 41) {
  spec.validate();
  if (!(sigma_max > 0.0) || grid_points < 2) throw InputError("implied_sigma: need sigma_max > 0 and >= 2 grid points");
  if (!std::isfinite(observed_price)) throw InputError("implied_sigma: observed price must be finite");

  auto price_at = [&](double sigma) { return call_price(model.with_sigma(sigma), curve, spec); };
  std::vector<double> sigmas(grid_points), prices(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    sigmas[i] = sigma_max * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    prices[i] = price_at(sigmas[i]);
    if (i > 0 && prices[i] < prices[i - 1] - 1e-12)
      throw NumericalError("implied_sigma: call price is not monotone in sigma near sigma=" + std::to_string(sigmas[i]));
  }
  if (observed_price < prices.front() || observed_price > prices.back())
    throw InputError("implied_sigma: observed price " + std::to_string(observed_price) + " outside attainable range [" +
                     std::to_string(prices.front()) + ", " + std::to_string(prices.back()) + "]");

  const auto cell = std::lower_bound(prices.begin(), prices.end(), observed_price) - prices.begin();
  if (cell == 0) return sigmas.front();
  if (prices[cell] == observed_price) return sigmas[cell];
  return find_root([&](double sigma) { return price_at(sigma) - observed_price; }, sigmas[cell - 1], sigmas[cell],
                   model.tolerances());
}

} // namespace infocredit
