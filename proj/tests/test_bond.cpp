#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "infocredit/bond.hpp"

using namespace infocredit;
using namespace infocredit::test;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("bond_price: t = 0 reduces to P_0T Q(tau > T)") {
  const auto m = credit_model();
  const auto curve = flat_curve();
  CHECK_THAT(bond_price(m, curve, {0.0, 0.0, true}, {1.0, 1.0, 0.0}), WithinRel(std::exp(-0.12), 1e-10));
  CHECK_THAT(bond_price(m, curve, {0.0, 0.0, true}, {1.0, 100.0, 0.0}), WithinRel(100.0 * std::exp(-0.12), 1e-10));
}

TEST_CASE("bond_price: reference state against the high-precision oracle") {
  const auto m = credit_model();
  const double price = bond_price(m, flat_curve(), {0.5, 0.2, true}, {1.0, 1.0, 0.0});
  CHECK_THAT(price, WithinRel(frozen::credit_bond_T1, 1e-9));
}

TEST_CASE("bond_price: default, maturity and recovery guards") {
  const auto m = credit_model();
  const auto curve = flat_curve();
  CHECK(bond_price(m, curve, {0.5, 0.2, false}, {1.0, 1.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(bond_price(m, curve, {1.5, 0.2, true}, {1.0, 1.0, 0.0}), InputError);
  CHECK_THROWS_AS(bond_price(m, curve, {0.5, 0.2, true}, {1.0, 1.0, 0.3}), InputError);
  CHECK_THROWS_AS(bond_price(m, curve, {0.5, 0.2, true}, {1.0, 0.0, 0.0}), InputError);
  CHECK_THROWS_AS(bond_price(m, curve, {0.5, 0.2, true}, {1.0, 1.0, 1.5}), InputError);
  CHECK_THAT(bond_price(m, curve, {1.0, 0.2, true}, {1.0, 1.0, 0.0}), WithinRel(1.0, 1e-15));
}

TEST_CASE("bond_price: consistency with posterior_survival and price bounds") {
  const auto m = credit_model();
  const auto curve = flat_curve();
  for (double t : {0.0, 0.3, 0.9})
    for (double xi : {-3.0, 0.0, 0.4, 3.0})
      for (double T : {1.0, 2.0, 10.0}) {
        const InformationState s{t, xi, true};
        const double b = bond_price(m, curve, s, {T, 2.0, 0.0});
        CHECK_THAT(b, WithinAbs(2.0 * curve.forward_discount(t, T) * posterior_survival(m, s, T), 1e-12));
        CHECK(b >= 0.0);
        CHECK(b <= 2.0 * curve.forward_discount(t, T));
      }
}

TEST_CASE("bond_price: monotone in xi with the direction set by phi") {
  const auto curve = flat_curve();
  const auto decreasing = credit_model();
  const auto increasing = InfoModel(0.3, PriorDensity::exponential(0.1), DefaultMap::exp_growth(0.025));
  double prev_dec = 2.0, prev_inc = -1.0;
  for (double xi = -4.0; xi <= 4.0; xi += 0.1) {
    const double d = bond_price(decreasing, curve, {1.0, xi, true}, {5.0, 1.0, 0.0});
    const double i = bond_price(increasing, curve, {1.0, xi, true}, {5.0, 1.0, 0.0});
    CHECK(d <= prev_dec + 1e-14);
    CHECK(i >= prev_inc - 1e-14);
    prev_dec = d;
    prev_inc = i;
  }
}

TEST_CASE("recovery_bond_price: limits and linearity") {
  const auto m = credit_model();
  const auto curve = flat_curve();
  const InformationState s{0.5, 0.2, true};
  CHECK_THAT(recovery_bond_price(m, curve, s, {1.0, 3.0, 1.0}), WithinRel(3.0 * curve.forward_discount(0.5, 1.0), 1e-14));
  CHECK_THAT(recovery_bond_price(m, curve, {0.5, 0.2, false}, {1.0, 3.0, 1.0}),
             WithinRel(3.0 * curve.forward_discount(0.5, 1.0), 1e-14));
  CHECK_THAT(recovery_bond_price(m, curve, {0.5, 0.2, false}, {1.0, 3.0, 0.25}),
             WithinRel(0.75 * curve.forward_discount(0.5, 1.0), 1e-14));
  CHECK_THAT(recovery_bond_price(m, curve, s, {1.0, 3.0, 0.0}), WithinRel(bond_price(m, curve, s, {1.0, 3.0, 0.0}), 1e-14));
  const double r0 = recovery_bond_price(m, curve, s, {1.0, 1.0, 0.0});
  const double r1 = recovery_bond_price(m, curve, s, {1.0, 1.0, 1.0});
  for (double R : {0.1, 0.4, 0.8}) CHECK_THAT(recovery_bond_price(m, curve, s, {1.0, 1.0, R}), WithinAbs(r0 + R * (r1 - r0), 1e-14));
}

TEST_CASE("recovery_bond_price: R = 0.4 at t = 0 against the direct expectation") {
  const auto m = credit_model();
  const auto curve = flat_curve();
  const double price = recovery_bond_price(m, curve, {0.0, 0.0, true}, {1.0, 1.0, 0.4});
  // E[P_0T (1{tau > T} + R 1{tau <= T})] by quadrature over the prior.
  const double defaulted = midpoint([](double u) { return 0.1 * std::exp(-0.1 * u); }, 0.0, 1.0, 100'000);
  const double direct = std::exp(-0.02) * ((1.0 - defaulted) + 0.4 * defaulted);
  CHECK_THAT(price, WithinRel(direct, 1e-9));
  CHECK_THAT(price, WithinRel(frozen::credit_recovery_price, 1e-10));
}

TEST_CASE("hazard_rate: prior hazard limits") {
  const auto m = credit_model();
  const auto silent = m.with_sigma(0.0);
  for (double t : {0.0, 0.5, 4.0})
    for (double xi : {-2.0, 0.0, 3.0}) CHECK_THAT(hazard_rate(silent, {t, xi, true}), WithinRel(0.1, 1e-8));
  CHECK_THAT(hazard_rate(m, {0.0, 0.0, true}), WithinRel(0.1, 1e-8));
}

TEST_CASE("hazard_rate and forward_hazard: reference values") {
  const auto m = credit_model();
  const InformationState s{0.5, 0.2, true};
  CHECK_THAT(hazard_rate(m, s), WithinRel(frozen::credit_hazard, 1e-9));
  CHECK(forward_hazard(m, s, 0.5) == hazard_rate(m, s));
  CHECK_THAT(forward_hazard(m, s, 0.75), WithinRel(frozen::credit_forward_hazard_075, 1e-9));
  const auto silent = m.with_sigma(0.0);
  for (double u : {0.5, 2.0, 30.0}) CHECK_THAT(forward_hazard(silent, s, u), WithinRel(0.1, 1e-8));
}

TEST_CASE("hazard_rate: zero prior density and degenerate posteriors") {
  const auto lognormal = InfoModel(0.3, PriorDensity::lognormal(1.0, 0.5), DefaultMap::exp_decay(0.025));
  CHECK(hazard_rate(lognormal, {0.0, 0.0, true}) == 0.0);
  const auto m = credit_model();
  CHECK_THROWS_AS(hazard_rate(m, {1000.0, 0.0, true}), DegenerateError);
  CHECK_THROWS_AS(hazard_rate(m, {0.5, 0.2, false}), InputError);
  CHECK_THROWS_AS(forward_hazard(m, {0.5, 0.2, true}, 0.4), InputError);
}

TEST_CASE("forward_hazard: integrates back to posterior survival") {
  const auto m = credit_model();
  for (const InformationState s : {InformationState{0.5, 0.2, true}, InformationState{2.0, 1.5, true},
                                   InformationState{1.0, -1.0, true}}) {
    for (double du : {0.25, 1.0, 2.0}) {
      const double u = s.t + du;
      const double cumulative = integrate([&](double v) { return forward_hazard(m, s, v); }, s.t, u);
      CHECK_THAT(std::exp(-cumulative), WithinAbs(posterior_survival(m, s, u), 1e-6));
    }
  }
}

TEST_CASE("bond_volatility: reference values and trivial cases") {
  const auto m = credit_model();
  const InformationState s{0.5, 0.2, true};
  CHECK_THAT(bond_volatility(m, s, 1.0), WithinRel(frozen::credit_volatility_T1, 1e-7));
  CHECK(bond_volatility(m, s, 0.5) == 0.0);
  CHECK_THROWS_AS(bond_volatility(m, s, 0.4), InputError);
  CHECK_THROWS_AS(bond_volatility(m, {0.5, 0.2, false}, 1.0), InputError);
}

TEST_CASE("bond_volatility: a spike prior leaves nothing to learn") {
  const auto map = DefaultMap::exp_decay(0.025);
  const auto m = InfoModel(0.3, PriorDensity::of_factor(Distribution::normal(0.5, 1e-6), map), map);
  CHECK_THAT(bond_volatility(m, {0.5, 0.2, true}, 1.0), WithinAbs(0.0, 1e-8));
  CHECK_THAT(bond_volatility(m, {0.5, 0.2, true}, 27.72), WithinAbs(0.0, 1e-5));
}
