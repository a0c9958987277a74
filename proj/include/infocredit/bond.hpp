#pragma once

#include <array>
#include <cmath>

#include "model.hpp"

namespace infocredit {

struct BondSpec {
  double maturity = 1.0;
  double principal = 1.0;
  /// Fraction of principal paid at maturity if default occurred before it.
  double recovery = 0.0;

  void validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw InputError("bond: maturity must be > 0");
    if (!(principal > 0.0) || !std::isfinite(principal)) throw InputError("bond: principal must be > 0");
    if (!(recovery >= 0.0 && recovery <= 1.0)) throw InputError("bond: recovery must lie in [0, 1]");
  }
};

namespace detail {

inline void check_bond_state(const InformationState& state, const BondSpec& spec) {
  spec.validate();
  check_state(state);
  if (state.t > spec.maturity) throw InputError("bond: valuation time after maturity");
}

} // namespace detail

/// Zero-recovery defaultable discount bond:
/// B_tT = N P_tT 1{tau > t} F_tT / F_tt.
inline double bond_price(const InfoModel& model, const TermStructure& curve, const InformationState& state,
                         const BondSpec& spec) {
  detail::check_bond_state(state, spec);
  if (spec.recovery != 0.0) throw InputError("bond_price: zero-recovery bond expected, use recovery_bond_price");
  if (!state.survived) return 0.0;
  return spec.principal * curve.forward_discount(state.t, spec.maturity) *
         posterior_survival(model, state, spec.maturity);
}

/// Bond paying N at T on survival and R N at T otherwise.
inline double recovery_bond_price(const InfoModel& model, const TermStructure& curve,
                                  const InformationState& state, const BondSpec& spec) {
  detail::check_bond_state(state, spec);
  const double riskless = curve.forward_discount(state.t, spec.maturity);
  BondSpec unit = spec;
  unit.principal = 1.0;
  unit.recovery = 0.0;
  const double zero_recovery = bond_price(model, curve, state, unit);
  return spec.principal * (zero_recovery + spec.recovery * (riskless - zero_recovery));
}

/// Forward hazard rate h_tu: posterior default density at u given survival to u.
inline double forward_hazard(const InfoModel& model, const InformationState& state, double u) {
  if (!state.survived) throw InputError("forward_hazard: undefined after default");
  if (!(u >= state.t)) throw InputError("forward_hazard: require u >= t");
  const detail::Kernel kernel(model, state);
  const double p = model.prior().density(u);
  if (p == 0.0) return 0.0;
  const double mass = detail::posterior_mass(model, kernel, u, kInf);
  if (!(mass > 0.0)) throw DegenerateError("forward_hazard: posterior survival mass underflows");
  return p * kernel(model.map().phi(u)) / mass;
}

/// Hazard rate h_t perceived at time t.
inline double hazard_rate(const InfoModel& model, const InformationState& state) {
  return forward_hazard(model, state, state.t);
}

/// Bond volatility Sigma_tT = E[X | f(X) > T, xi_t] - E[X | f(X) > t, xi_t],
/// evaluated with integrals over the factor x.
inline double bond_volatility(const InfoModel& model, const InformationState& state, double T) {
  if (!state.survived) throw InputError("bond_volatility: undefined after default");
  if (!(T >= state.t)) throw InputError("bond_volatility: require T >= t");
  detail::check_state(state);

  const auto& map = model.map();
  const Interval xs = model.phi_range();
  const detail::Kernel kernel(model, state);

  auto conditional_mean = [&](double u) {
    // {f(x) > u} is {x < phi(u)} for decreasing phi, {x > phi(u)} otherwise.
    const double edge = map.phi(u);
    const Interval r = map.decreasing() ? Interval{xs.lo, std::min(xs.hi, edge)} : Interval{std::max(xs.lo, edge), xs.hi};
    if (!(r.lo < r.hi)) throw DegenerateError("bond_volatility: no factor mass with f(x) > u");
    const auto m = integrate(
        [&](double x) {
          const double w = factor_prior_density(model, x) * kernel(x);
          return std::array<double, 2>{w, w * x};
        },
        r.lo, r.hi, model.tolerances());
    if (!(m[0] > 0.0)) throw DegenerateError("bond_volatility: conditional survival probability underflows");
    return m[1] / m[0];
  };
  if (T == state.t) return 0.0;
  return conditional_mean(T) - conditional_mean(state.t);
}

} // namespace infocredit
