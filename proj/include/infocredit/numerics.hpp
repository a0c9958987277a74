#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"

namespace infocredit {

struct Tolerances {
  double quad_rel_tol = 1e-8;
  double root_abs_tol = 1e-10;
  /// Prior mass allowed to fall outside the truncated integration domain.
  double tail_mass = 1e-12;

  void validate() const {
    if (!(quad_rel_tol > 0.0) || !(root_abs_tol > 0.0) || !(tail_mass > 0.0) || !(tail_mass < 0.5))
      throw InputError("tolerances must be strictly positive (and tail_mass < 0.5)");
  }
};

namespace detail {

// Component access so that the quadrature works on scalars and on
// fixed-size arrays of integrands sharing the same nodes.
template <class R>
struct Components;

template <>
struct Components<double> {
  static constexpr std::size_t size = 1;
  static double& at(double& v, std::size_t) { return v; }
  static double at(const double& v, std::size_t) { return v; }
  static double zero() { return 0.0; }
};

template <std::size_t N>
struct Components<std::array<double, N>> {
  static constexpr std::size_t size = N;
  static double& at(std::array<double, N>& v, std::size_t i) { return v[i]; }
  static double at(const std::array<double, N>& v, std::size_t i) { return v[i]; }
  static std::array<double, N> zero() { return {}; }
};

// Kronrod 15-point abscissae/weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class R>
struct Panel {
  double lo;
  double hi;
  R value;
  R error;
  R l1;             // integral of |f| on this panel
  double priority;  // largest component error on this panel
};

template <class R, class F>
Panel<R> gauss_kronrod_15(F& f, double lo, double hi) {
  using C = Components<R>;
  constexpr std::size_t n = C::size;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = std::numeric_limits<double>::min();

  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);

  std::array<R, 15> y;
  y[0] = f(centre);
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    y[1 + 2 * j] = f(centre - dx);
    y[2 + 2 * j] = f(centre + dx);
  }

  Panel<R> out{lo, hi, C::zero(), C::zero(), C::zero(), 0.0};
  for (std::size_t c = 0; c < n; ++c) {
    const double fc = C::at(y[0], c);
    double kronrod = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    double abs_sum = kWgk[7] * std::abs(fc);
    for (std::size_t j = 0; j < 7; ++j) {
      const double f1 = C::at(y[1 + 2 * j], c);
      const double f2 = C::at(y[2 + 2 * j], c);
      kronrod += kWgk[j] * (f1 + f2);
      abs_sum += kWgk[j] * (std::abs(f1) + std::abs(f2));
      if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    const double mean = 0.5 * kronrod;
    double asc = kWgk[7] * std::abs(fc - mean);
    for (std::size_t j = 0; j < 7; ++j)
      asc += kWgk[j] * (std::abs(C::at(y[1 + 2 * j], c) - mean) + std::abs(C::at(y[2 + 2 * j], c) - mean));

    const double value = kronrod * half;
    double err = std::abs((kronrod - gauss) * half);
    const double resasc = asc * std::abs(half);
    const double resabs = abs_sum * std::abs(half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);

    C::at(out.value, c) = value;
    C::at(out.error, c) = err;
    C::at(out.l1, c) = resabs;
  }
  return out;
}

} // namespace detail

template <class R>
struct QuadratureResult {
  R value;
  R error;
  std::size_t panels = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature with bisection of the
/// worst panel. `fn` may return `double` or `std::array<double, N>`; vector
/// integrands share nodes and every component must meet the tolerance.
///
/// Converges when each component satisfies err <= quad_rel_tol * ∫|f| (equal
/// to quad_rel_tol * |I| for nonnegative integrands) with a 1e-300 absolute
/// floor. Throws QuadratureError carrying the best estimate otherwise.
///
/// `points` is a nondecreasing list of breakpoints; the initial panels are
/// the gaps between them and the tolerance applies to the whole range.
template <class F>
auto integrate_with_error(F&& fn, std::span<const double> points, const Tolerances& tol = {})
    -> QuadratureResult<std::decay_t<std::invoke_result_t<F&, double>>> {
  using R = std::decay_t<std::invoke_result_t<F&, double>>;
  using C = detail::Components<R>;
  using detail::Panel;
  constexpr std::size_t max_panels = 2000;
  constexpr double abs_floor = 1e-300;

  if (points.size() < 2) throw InputError("integrate: need at least two breakpoints");
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!std::isfinite(points[i]) || (i > 0 && !(points[i - 1] <= points[i])))
      throw InputError("integrate: require finite lo <= hi");
  const double lo = points.front();
  const double hi = points.back();
  if (lo == hi) return {C::zero(), C::zero(), 0};

  auto by_priority = [](const Panel<R>& a, const Panel<R>& b) { return a.priority < b.priority; };
  std::vector<Panel<R>> heap;
  heap.reserve(64);

  R total = C::zero();
  R total_err = C::zero();
  R total_l1 = C::zero();
  auto worst_error = [&] {
    double e = 0.0;
    for (std::size_t c = 0; c < C::size; ++c) e = std::max(e, C::at(total_err, c));
    return e;
  };
  auto push = [&](Panel<R> p) {
    p.priority = 0.0;
    for (std::size_t c = 0; c < C::size; ++c)
      if (!std::isfinite(C::at(p.value, c)) || !std::isfinite(C::at(p.error, c)))
        throw QuadratureError("integrate: integrand not finite on [" + std::to_string(p.lo) + ", " +
                                  std::to_string(p.hi) + "]",
                              C::at(total, 0), worst_error());
    for (std::size_t c = 0; c < C::size; ++c) {
      C::at(total, c) += C::at(p.value, c);
      C::at(total_err, c) += C::at(p.error, c);
      C::at(total_l1, c) += C::at(p.l1, c);
      p.priority = std::max(p.priority, C::at(p.error, c));
    }
    heap.push_back(p);
    std::push_heap(heap.begin(), heap.end(), by_priority);
  };
  auto converged = [&] {
    for (std::size_t c = 0; c < C::size; ++c)
      if (C::at(total_err, c) > std::max(tol.quad_rel_tol * C::at(total_l1, c), abs_floor)) return false;
    return true;
  };

  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i] < points[i + 1]) push(detail::gauss_kronrod_15<R>(fn, points[i], points[i + 1]));
  while (!converged()) {
    std::pop_heap(heap.begin(), heap.end(), by_priority);
    Panel<R> worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (heap.size() + 2 > max_panels || !(worst.lo < mid && mid < worst.hi)) {
      heap.push_back(worst);
      throw QuadratureError("integrate: no convergence on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                            C::at(total, 0), worst_error());
    }
    for (std::size_t c = 0; c < C::size; ++c) {
      C::at(total, c) -= C::at(worst.value, c);
      C::at(total_err, c) -= C::at(worst.error, c);
      C::at(total_l1, c) -= C::at(worst.l1, c);
    }
    push(detail::gauss_kronrod_15<R>(fn, worst.lo, mid));
    push(detail::gauss_kronrod_15<R>(fn, mid, worst.hi));
  }

  // Re-sum from the panels so that the running subtraction leaves no residue.
  R value = C::zero();
  R error = C::zero();
  for (const auto& p : heap)
    for (std::size_t c = 0; c < C::size; ++c) {
      C::at(value, c) += C::at(p.value, c);
      C::at(error, c) += C::at(p.error, c);
    }
  return {value, error, heap.size()};
}

template <class F>
auto integrate_with_error(F&& fn, double lo, double hi, const Tolerances& tol = {}) {
  const std::array<double, 2> points{lo, hi};
  return integrate_with_error(std::forward<F>(fn), std::span<const double>(points), tol);
}

template <class F>
auto integrate(F&& fn, double lo, double hi, const Tolerances& tol = {}) {
  return integrate_with_error(std::forward<F>(fn), lo, hi, tol).value;
}

template <class F>
auto integrate(F&& fn, std::span<const double> points, const Tolerances& tol = {}) {
  return integrate_with_error(std::forward<F>(fn), points, tol).value;
}

/// Bracketed root of a continuous function (TOMS 748: inverse cubic /
/// quadratic interpolation safeguarded by bisection). The returned point lies
/// inside [lo, hi] and the final bracket is narrower than root_abs_tol.
template <class F>
double find_root(F&& fn, double lo, double hi, const Tolerances& tol = {}) {
  if (!(lo <= hi)) throw InputError("find_root: require lo <= hi");
  const double flo = fn(lo);
  const double fhi = fn(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) throw NumericalError("find_root: non-finite value at bracket end");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0))
    throw BracketError("find_root: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

  const double width = tol.root_abs_tol;
  auto done = [width](double a, double b) { return std::abs(b - a) <= width; };
  std::uintmax_t iterations = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, done, iterations);
  if (!done(a, b)) throw RootConvergenceError("find_root: bracket did not shrink below root_abs_tol");
  return std::clamp(0.5 * (a + b), lo, hi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// log(sum(exp(terms))) without overflow. Empty or all -inf input gives -inf.
inline double log_sum_exp(std::span<const double> terms) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : terms) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

/// sum(exp(num)) / sum(exp(den)) with both sides shifted by the common
/// maximum exponent.
inline double shifted_exp_ratio(std::span<const double> log_numerator_terms,
                                std::span<const double> log_denominator_terms) {
  if (log_numerator_terms.empty() || log_denominator_terms.empty())
    throw InputError("shifted_exp_ratio: term lists must be non-empty");
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : log_numerator_terms) shift = std::max(shift, v);
  for (double v : log_denominator_terms) shift = std::max(shift, v);
  if (!std::isfinite(shift)) {
    if (shift == -std::numeric_limits<double>::infinity()) throw DegenerateError("shifted_exp_ratio: all terms are -inf");
    throw InputError("shifted_exp_ratio: non-finite exponent");
  }
  double num = 0.0;
  double den = 0.0;
  for (double v : log_numerator_terms) num += std::exp(v - shift);
  for (double v : log_denominator_terms) den += std::exp(v - shift);
  if (den == 0.0) throw DegenerateError("shifted_exp_ratio: denominator underflows after shift");
  return num / den;
}

inline double shifted_exp_ratio(std::initializer_list<double> num, std::initializer_list<double> den) {
  return shifted_exp_ratio(std::span<const double>(num.begin(), num.size()), std::span<const double>(den.begin(), den.size()));
}

} // namespace infocredit
