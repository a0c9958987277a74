#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "infocredit/portfolio.hpp"
#include "stats.hpp"

using namespace infocredit;
using namespace infocredit::test;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// A uniform factor pushed through f(x) = -ln(x) / rate gives an Exp(rate) time.
Factor uniform_factor() { return {Distribution::uniform(0.0, 1.0), 0.0}; }
TimeExpr exp_leaf(std::size_t k, double rate) { return TimeExpr::leaf(k, DefaultMap::exp_decay(rate)); }

FactorSet uniforms(std::size_t n) { return FactorSet(std::vector<Factor>(n, uniform_factor())); }

double defaulted_by(double rate, double T) { return 1.0 - std::exp(-rate * T); }

} // namespace

TEST_CASE("TimeExpr: evaluation of leaves and combinators") {
  const std::vector<double> x{0.5, 0.25};
  const auto a = exp_leaf(0, 0.1);
  const auto b = exp_leaf(1, 0.2);
  const double ta = -std::log(0.5) / 0.1, tb = -std::log(0.25) / 0.2;
  CHECK_THAT(a.evaluate(x), WithinRel(ta, 1e-14));
  CHECK_THAT(TimeExpr::min({a, b}).evaluate(x), WithinRel(std::min(ta, tb), 1e-14));
  CHECK_THAT(TimeExpr::max({a, b}).evaluate(x), WithinRel(std::max(ta, tb), 1e-14));
  CHECK_THAT(TimeExpr::weighted({{0.3, a}, {0.7, b}}).evaluate(x), WithinRel(0.3 * ta + 0.7 * tb, 1e-14));
  CHECK_THROWS_AS(TimeExpr::weighted({{0.0, a}}), InputError);
  CHECK_THROWS_AS(TimeExpr::min({}), InputError);
}

TEST_CASE("NameMap: rejects bounded, nonpositive and dangling default times") {
  const FactorSet u = uniforms(1);
  CHECK_THROWS_WITH(NameMap({TimeExpr::leaf(0, DefaultMap::linear(0.0, 1.0))}, u), Catch::Matchers::ContainsSubstring("bounded"));
  const FactorSet gauss({{Distribution::normal(0.0, 1.0), 0.0}});
  CHECK_THROWS_WITH(NameMap({TimeExpr::leaf(0, DefaultMap::linear(0.0, 1.0))}, gauss), Catch::Matchers::ContainsSubstring("<= 0"));
  CHECK_THROWS_AS(NameMap({exp_leaf(3, 0.1)}, u), InputError);
  CHECK_THROWS_AS(NameMap({}, u), InputError);
  CHECK_NOTHROW(NameMap({exp_leaf(0, 0.1)}, u));
  CHECK_THROWS_AS(FactorSet({}), InputError);
  CHECK_THROWS_AS(FactorSet({{Distribution::uniform(0.0, 1.0), -1.0}}), InputError);
  CHECK_THROWS_AS(BasketSpec({0, 1.0, 1.0}).validate(2), InputError);
  CHECK_THROWS_AS(BasketSpec({3, 1.0, 1.0}).validate(2), InputError);
  CHECK_THROWS_AS(BasketSpec({1, 1.0, 0.0}).validate(2), InputError);
}

TEST_CASE("sample_default_vector: marginal law of a single name") {
  const FactorSet f = uniforms(1);
  const NameMap names({exp_leaf(0, 0.1)}, f);
  const std::size_t n = 20'000;
  std::vector<double> tau;
  for (std::size_t p = 0; p < n; ++p) {
    Rng rng(Seed{77, 0}, p);
    tau.push_back(sample_default_vector(f, names, rng)[0]);
  }
  CHECK(ks_statistic(tau, [](double u) { return defaulted_by(0.1, u); }) < ks_critical_1pct(n));
  CHECK(sample_default_vector(f, names, Seed{1, 2}) == sample_default_vector(f, names, Seed{1, 2}));
}

TEST_CASE("comonotone names default together") {
  const FactorSet f = uniforms(1);
  const NameMap names({exp_leaf(0, 0.1), exp_leaf(0, 0.1), exp_leaf(0, 0.1)}, f);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto tau = sample_default_vector(f, names, Seed{s, 0});
    CHECK(tau[0] == tau[1]);
    CHECK(tau[1] == tau[2]);
  }
  const auto curve = flat_curve();
  const auto first = kth_to_default_price(f, names, {1, 1.0, 2.0}, curve, 5'000, {4, 0});
  for (std::size_t k : {2u, 3u}) {
    const auto kth = kth_to_default_price(f, names, {k, 1.0, 2.0}, curve, 5'000, {4, 0});
    CHECK(kth.price == first.price);
  }
  const auto rho = default_correlation(f, names, 2.0, 5'000, {4, 0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(rho(i, j).has_value());
      CHECK(*rho(i, j) == 1.0);
    }
}

TEST_CASE("independent names: binomial oracle and vanishing correlation") {
  const FactorSet f = uniforms(3);
  const std::vector<double> rates{0.1, 0.2, 0.3};
  const NameMap names({exp_leaf(0, rates[0]), exp_leaf(1, rates[1]), exp_leaf(2, rates[2])}, f);
  const auto curve = flat_curve();
  const double T = 2.0;
  const std::size_t n = 100'000;
  std::vector<double> q;
  for (double r : rates) q.push_back(defaulted_by(r, T));
  const double exactly_two = q[0] * q[1] * (1 - q[2]) + q[0] * (1 - q[1]) * q[2] + (1 - q[0]) * q[1] * q[2];
  const double at_least_two = exactly_two + q[0] * q[1] * q[2];
  const auto est = kth_to_default_price(f, names, {2, 3.0, T}, curve, n, {21, 0});
  const double oracle = curve.discount(T) * 3.0 * at_least_two;
  CHECK(std::abs(est.price - oracle) < 3.0 * est.standard_error);
  CHECK(est.n_paths == n);

  const auto rho = default_correlation(f, names, T, n, {22, 0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(*rho(i, j)) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("single name: basket price is the discounted default probability") {
  const FactorSet f = uniforms(1);
  const NameMap names({exp_leaf(0, 0.15)}, f);
  const auto curve = flat_curve();
  const auto est = kth_to_default_price(f, names, {1, 1.0, 3.0}, curve, 50'000, {5, 1});
  CHECK(std::abs(est.price - curve.discount(3.0) * defaulted_by(0.15, 3.0)) < 3.0 * est.standard_error);
  CHECK_THROWS_AS(kth_to_default_price(f, names, {1, 1.0, 3.0}, curve, 1, {5, 1}), InputError);
}

TEST_CASE("basket price: monotone in k and horizon, independent of thread count") {
  const FactorSet f = uniforms(4);
  const NameMap names({TimeExpr::min({exp_leaf(0, 0.1), exp_leaf(1, 0.05)}),
                       TimeExpr::min({exp_leaf(0, 0.1), exp_leaf(2, 0.05)}),
                       TimeExpr::weighted({{0.5, exp_leaf(1, 0.2)}, {0.5, exp_leaf(3, 0.2)}})},
                      f);
  const auto curve = TermStructure::flat(0.0);
  const Seed seed{31, 0};
  double prev = kInf;
  for (std::size_t k = 1; k <= 3; ++k) {
    const double p = kth_to_default_price(f, names, {k, 1.0, 4.0}, curve, 4'000, seed).price;
    CHECK(p <= prev);
    prev = p;
  }
  prev = -kInf;
  for (double T : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double p = kth_to_default_price(f, names, {2, 1.0, T}, curve, 4'000, seed).price;
    CHECK(p >= prev);
    prev = p;
  }
  const auto one = kth_to_default_price(f, names, {2, 1.0, 4.0}, curve, 3'001, seed, 1);
  const auto four = kth_to_default_price(f, names, {2, 1.0, 4.0}, curve, 3'001, seed, 4);
  CHECK(one.price == four.price);
  CHECK(one.standard_error == four.standard_error);
}

TEST_CASE("kth_default_time: order statistics") {
  const std::vector<double> tau{4.0, 1.0, 3.0, 2.0};
  for (std::size_t k = 1; k <= 4; ++k) CHECK(kth_default_time(tau, k) == static_cast<double>(k));
  CHECK_THROWS_AS(kth_default_time(tau, 0), InputError);
  CHECK_THROWS_AS(kth_default_time(tau, 5), InputError);

  const FactorSet f = uniforms(3);
  const NameMap names({exp_leaf(0, 0.1), exp_leaf(1, 0.2), exp_leaf(2, 0.3)}, f);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto v = sample_default_vector(f, names, Seed{s, 9});
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k <= 3; ++k) CHECK(kth_default_time(v, k) == sorted[k - 1]);
  }
}

TEST_CASE("default_correlation: shared factor against the closed form") {
  // tau_a = min(E0, E1), tau_b = min(E0, E2) with independent exponentials.
  const double l0 = 0.1, l1 = 0.2, l2 = 0.3, T = 2.0;
  const FactorSet f = uniforms(3);
  const NameMap names({TimeExpr::min({exp_leaf(0, l0), exp_leaf(1, l1)}), TimeExpr::min({exp_leaf(0, l0), exp_leaf(2, l2)})},
                      f);
  const double pa = defaulted_by(l0 + l1, T);
  const double pb = defaulted_by(l0 + l2, T);
  const double both = 1.0 - (1.0 - pa) - (1.0 - pb) + std::exp(-(l0 + l1 + l2) * T);
  const double exact = (both - pa * pb) / std::sqrt(pa * (1 - pa) * pb * (1 - pb));
  REQUIRE(exact > 0.0);
  REQUIRE(exact < 1.0);
  // Independent batches give an empirical standard error for the estimator.
  std::vector<double> batches;
  for (std::uint64_t b = 0; b < 20; ++b) {
    const auto rho = default_correlation(f, names, T, 10'000, {8, b});
    CHECK(*rho(0, 1) == *rho(1, 0));
    CHECK(*rho(0, 0) == 1.0);
    batches.push_back(*rho(0, 1));
  }
  const auto s = summarize(batches);
  CHECK(std::abs(s.mean - exact) < 3.0 * s.standard_error);
}

TEST_CASE("default_correlation: names that never default give empty entries") {
  const FactorSet f = uniforms(2);
  const NameMap names({exp_leaf(0, 0.1), exp_leaf(1, 1e-12)}, f);
  const auto rho = default_correlation(f, names, 1.0, 1'000, {2, 0});
  CHECK(rho(0, 0).has_value());
  CHECK_FALSE(rho(1, 1).has_value());
  CHECK_FALSE(rho(0, 1).has_value());
  const NameMap single({exp_leaf(0, 0.1)}, f);
  CHECK_THROWS_AS(default_correlation(f, single, 1.0, 100, {2, 0}), InputError);
}
