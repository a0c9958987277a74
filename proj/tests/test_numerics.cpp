#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "infocredit/numerics.hpp"

using namespace infocredit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Midpoint rule on n cells.
template <class F>
double midpoint(F f, double lo, double hi, std::size_t n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(lo + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

} // namespace

TEST_CASE("integrate: constant and Gaussian normalisation") {
  CHECK(integrate([](double) { return 1.0; }, 0.0, 1.0) == 1.0);
  const double g = integrate([](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }, -8.0, 8.0);
  CHECK_THAT(g, WithinAbs(1.0, 1e-8));
}

TEST_CASE("integrate: x exp(-x) on [0, 40] against closed form and brute force") {
  auto f = [](double x) { return x * std::exp(-x); };
  const double exact = 1.0 - 41.0 * std::exp(-40.0);
  const double brute = midpoint(f, 0.0, 40.0, 1'000'000);
  REQUIRE_THAT(brute, WithinAbs(exact, 1e-9));
  CHECK_THAT(integrate(f, 0.0, 40.0), WithinAbs(brute, 1e-8));
  CHECK_THAT(integrate(f, 0.0, 40.0), WithinRel(exact, 1e-12));
}

TEST_CASE("integrate: polynomials up to the Kronrod degree are exact on [0, 1]") {
  for (int k = 0; k <= 22; ++k) {
    const double v = integrate([k](double x) { return std::pow(x, k); }, 0.0, 1.0);
    INFO("degree " << k);
    CHECK_THAT(v, WithinRel(1.0 / (k + 1), 4e-16));
  }
}

TEST_CASE("integrate: vector integrands share nodes and meet the tolerance per component") {
  const auto m = integrate([](double x) { return std::array<double, 3>{std::exp(-x), x * std::exp(-x), std::sin(x)}; },
                           0.0, 30.0);
  CHECK_THAT(m[0], WithinRel(1.0 - std::exp(-30.0), 1e-10));
  CHECK_THAT(m[1], WithinRel(1.0 - 31.0 * std::exp(-30.0), 1e-10));
  CHECK_THAT(m[2], WithinAbs(1.0 - std::cos(30.0), 1e-9));
}

TEST_CASE("integrate: breakpoints expose a spike a single panel would miss") {
  auto spike = [](double x) { return std::exp(-0.5 * std::pow((x - 3.7) / 1e-4, 2)); };
  const double exact = std::sqrt(2.0 * std::numbers::pi) * 1e-4;
  CHECK(integrate(spike, 0.0, 1000.0) < 1e-3 * exact);
  const std::vector<double> cuts{0.0, 3.7 - 1e-3, 3.7, 3.7 + 1e-3, 1000.0};
  CHECK_THAT(integrate(spike, std::span<const double>(cuts)), WithinRel(exact, 1e-10));
  const std::vector<double> repeated{0.0, 1.0, 1.0, 2.0};
  CHECK_THAT(integrate([](double x) { return x; }, std::span<const double>(repeated)), WithinRel(2.0, 1e-14));
  const std::vector<double> unsorted{0.0, 2.0, 1.0};
  CHECK_THROWS_AS(integrate([](double x) { return x; }, std::span<const double>(unsorted)), InputError);
}

TEST_CASE("integrate: signed integrand with zero integral converges") {
  const auto r = integrate_with_error([](double x) { return std::sin(x); }, -3.0, 3.0);
  CHECK_THAT(r.value, WithinAbs(0.0, 1e-12));
  CHECK(r.panels < 100);
}

TEST_CASE("integrate: input errors and non-convergence") {
  CHECK(integrate([](double) { return 5.0; }, 2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(integrate([](double) { return 1.0; }, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(integrate([](double) { return 1.0; }, 0.0, INFINITY), InputError);
  try {
    integrate([](double x) { return 1.0 / std::abs(x - 0.1 * std::numbers::pi); }, 0.0, 1.0);
    FAIL("expected QuadratureError");
  } catch (const QuadratureError& e) {
    CHECK(std::isfinite(e.estimate()));
    CHECK(e.estimate() > 10.0);
    CHECK(e.achieved_error() > 0.0);
  }
  // Nodes eventually reach x = 0 and the integrand overflows.
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, 0.0, 1.0), QuadratureError);
}

TEST_CASE("find_root: basic brackets") {
  CHECK_THAT(find_root([](double y) { return y; }, -1.0, 1.0), WithinAbs(0.0, 1e-10));
  CHECK_THAT(find_root([](double y) { return y * y - 2.0; }, 0.0, 2.0), WithinAbs(std::numbers::sqrt2, 1e-10));
}

TEST_CASE("find_root: normal quantile against fine tabulation") {
  auto f = [](double y) { return normal_cdf(y) - 0.975; };
  // Tabulate on a 1e-7 grid and take the first point past the crossing.
  double tabulated = 0.0;
  for (double y = 1.9; y < 2.0; y += 1e-7)
    if (f(y) >= 0.0) {
      tabulated = y;
      break;
    }
  const double root = find_root(f, 0.0, 4.0);
  CHECK_THAT(root, WithinAbs(tabulated, 1e-6));
  CHECK_THAT(root, WithinAbs(1.9599639845400542355, 1e-10));
}

TEST_CASE("find_root: distinct errors for missing sign change and non-convergence") {
  CHECK_THROWS_AS(find_root([](double y) { return y * y + 1.0; }, -1.0, 1.0), BracketError);
  Tolerances tight;
  tight.root_abs_tol = 1e-300;
  CHECK_THROWS_AS(find_root([](double y) { return y * y - 2.0; }, 0.0, 2.0, tight), RootConvergenceError);
  CHECK_THROWS_AS(find_root([](double y) { return y; }, 1.0, -1.0), InputError);
}

TEST_CASE("find_root: result stays inside the bracket") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double r = u(gen);
    const double lo = r - std::abs(u(gen)) - 1e-3;
    const double hi = r + std::abs(u(gen)) + 1e-3;
    const double y = find_root([r](double x) { return std::tanh(x - r) + 0.1 * (x - r); }, lo, hi);
    CHECK(y >= lo);
    CHECK(y <= hi);
    CHECK_THAT(y, WithinAbs(r, 1e-9));
  }
}

TEST_CASE("normal_cdf: symmetry, limits and value at 1") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(40.0) == 1.0);
  CHECK(normal_cdf(-40.0) >= 0.0);
  const double simpson = 0.5 + midpoint(normal_pdf, 0.0, 1.0, 200'000);
  CHECK_THAT(normal_cdf(1.0), WithinAbs(simpson, 1e-12));
  CHECK_THAT(normal_cdf(1.0), WithinAbs(0.84134474606854294859, 1e-15));
  for (double x = -8.0; x <= 8.0; x += 0.37) CHECK_THAT(normal_cdf(-x), WithinAbs(1.0 - normal_cdf(x), 1e-15));
  double prev = 0.0;
  for (double x = -10.0; x <= 10.0; x += 0.01) {
    CHECK(normal_cdf(x) >= prev);
    prev = normal_cdf(x);
  }
}

TEST_CASE("shifted_exp_ratio: examples") {
  CHECK(shifted_exp_ratio({0.0}, {0.0}) == 1.0);
  CHECK(shifted_exp_ratio({1000.0, 1000.0}, {1000.0}) == 2.0);
  CHECK_THAT(shifted_exp_ratio({700.0, 710.0}, {709.0, 705.0}), WithinRel(2.6695114308856816963, 1e-14));
  CHECK_THAT(shifted_exp_ratio({1e6}, {1e6 - 1.0}), WithinRel(std::numbers::e, 1e-14));
  CHECK_THAT(shifted_exp_ratio({-1e6}, {-1e6, -1e6}), WithinRel(0.5, 1e-15));
}

TEST_CASE("shifted_exp_ratio: degenerate and invalid inputs") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(shifted_exp_ratio({0.0}, {-inf}), DegenerateError);
  CHECK_THROWS_AS(shifted_exp_ratio({800.0}, {0.0}), DegenerateError);
  CHECK_THROWS_AS(shifted_exp_ratio(std::span<const double>{}, std::span<const double>{}), InputError);
}

TEST_CASE("shifted_exp_ratio: reciprocal property") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> centre(-1e5, 1e5);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int i = 0; i < 500; ++i) {
    const double c = centre(gen);
    const std::vector<double> a{c + u(gen), c + u(gen), c + u(gen)};
    const std::vector<double> b{c + u(gen), c + u(gen)};
    CHECK_THAT(shifted_exp_ratio(a, b) * shifted_exp_ratio(b, a), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> v{1000.0, 1000.0};
  CHECK_THAT(log_sum_exp(v), WithinRel(1000.0 + std::log(2.0), 1e-15));
  CHECK(log_sum_exp(std::span<const double>{}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("Tolerances: defaults and validation") {
  const Tolerances t;
  CHECK(t.quad_rel_tol == 1e-8);
  CHECK(t.root_abs_tol == 1e-10);
  CHECK(t.tail_mass == 1e-12);
  CHECK_NOTHROW(t.validate());
  Tolerances bad;
  bad.quad_rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
