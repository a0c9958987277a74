#pragma once

#include <cmath>

#include "infocredit/model.hpp"

namespace infocredit::test {

// Reference values at 30 digits from tests/oracles/frozen_values.py.
namespace frozen {
inline constexpr double credit_f_u1 = 0.93478107390657230925;
inline constexpr double credit_survival_u1 = 0.95101291493543994018;
inline constexpr double credit_bond_T1 = 0.94155017832514401297;
inline constexpr double credit_hazard = 0.10045357369739995796;
inline constexpr double credit_forward_hazard_075 = 0.10045528347301150554;
inline constexpr double credit_volatility_T1 = -0.0098224080607569957912;
inline constexpr double credit_mean_x_given_survival = 0.79079464250299988227;
inline constexpr double credit_recovery_price = 0.9242317313529966302;
inline constexpr double option_b_t1_y0 = 0.62166289543763292202;
inline constexpr double option_joint_density = 0.021750628544321021061;
inline constexpr double option_arrow_debreu = 0.234945758645369741;
inline constexpr double option_critical_value = 6.8402666436055130247;
inline constexpr double option_call = 0.076834926148675295884;
inline constexpr double gauss_posterior_at_0 = 0.53000706468805712175;
} // namespace frozen

/// Exp(0.1) default prior, phi(u) = exp(-0.025 u), sigma = 0.3.
inline InfoModel credit_model() { return InfoModel(0.3, PriorDensity::exponential(0.1), DefaultMap::exp_decay(0.025)); }

/// Exp(0.1) default prior, phi(u) = exp(-0.05 u), sigma = 0.25.
inline InfoModel option_model() { return InfoModel(0.25, PriorDensity::exponential(0.1), DefaultMap::exp_decay(0.05)); }

/// Increasing-phi counterpart of option_model().
inline InfoModel option_increasing_model() {
  return InfoModel(0.25, PriorDensity::exponential(0.1), DefaultMap::exp_growth(0.05));
}

inline TermStructure flat_curve() { return TermStructure::flat(0.02); }

/// Midpoint rule on n cells.
template <class F>
double midpoint(F f, double lo, double hi, std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(lo + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

} // namespace infocredit::test
