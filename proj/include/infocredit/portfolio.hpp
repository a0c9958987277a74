#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "random.hpp"
#include "simulate.hpp"

namespace infocredit {

/// Independent market factor X_k with its a priori law and the flow rate of
/// its information process.
struct Factor {
  Distribution law;
  double sigma = 0.0;
};

class FactorSet {
public:
  explicit FactorSet(std::vector<Factor> factors, Tolerances tol = {}) : factors_(std::move(factors)), tol_(tol) {
    tol_.validate();
    if (factors_.empty()) throw InputError("factor set: need at least one factor");
    for (const auto& f : factors_)
      if (!(f.sigma >= 0.0) || !std::isfinite(f.sigma)) throw InputError("factor set: sigma must be finite and >= 0");
  }

  std::size_t size() const { return factors_.size(); }
  const Factor& operator[](std::size_t k) const { return factors_.at(k); }
  const Tolerances& tolerances() const { return tol_; }

  /// Factor values carrying all but tail_mass of the law.
  Interval truncation(std::size_t k) const {
    const auto& law = factors_.at(k).law;
    return {law.quantile(0.5 * tol_.tail_mass), law.upper_quantile(0.5 * tol_.tail_mass)};
  }

private:
  std::vector<Factor> factors_;
  Tolerances tol_;
};

/// Default time of one name as an expression in the factors: monotone
/// per-factor maps tau = f(X_k) combined by min, max or positive weights.
class TimeExpr {
public:
  enum class Kind { leaf, min, max, weighted };

  static TimeExpr leaf(std::size_t factor, DefaultMap map) {
    TimeExpr e(Kind::leaf);
    e.factor_ = factor;
    e.map_ = std::make_shared<const DefaultMap>(std::move(map));
    return e;
  }
  static TimeExpr min(std::vector<TimeExpr> terms) { return combine(Kind::min, std::move(terms), {}); }
  static TimeExpr max(std::vector<TimeExpr> terms) { return combine(Kind::max, std::move(terms), {}); }
  static TimeExpr weighted(std::vector<std::pair<double, TimeExpr>> terms) {
    std::vector<double> w;
    std::vector<TimeExpr> children;
    for (auto& [weight, term] : terms) {
      if (!(weight > 0.0) || !std::isfinite(weight)) throw InputError("weighted default time: weights must be > 0");
      w.push_back(weight);
      children.push_back(std::move(term));
    }
    return combine(Kind::weighted, std::move(children), std::move(w));
  }

  Kind kind() const { return kind_; }

  double evaluate(std::span<const double> factors) const {
    switch (kind_) {
      case Kind::leaf:
        return map_->f(factors[factor_]);
      case Kind::min: {
        double v = kInf;
        for (const auto& c : children_) v = std::min(v, c.evaluate(factors));
        return v;
      }
      case Kind::max: {
        double v = -kInf;
        for (const auto& c : children_) v = std::max(v, c.evaluate(factors));
        return v;
      }
      case Kind::weighted: {
        double v = 0.0;
        for (std::size_t i = 0; i < children_.size(); ++i) v += weights_[i] * children_[i].evaluate(factors);
        return v;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// Range of the default time over the truncated factor box.
  Interval truncated_range(const FactorSet& factors) const {
    return range([&](std::size_t k, const DefaultMap&) { return factors.truncation(k); });
  }

  /// Range over the full factor supports; an infinite upper end means
  /// Q(tau > t) > 0 for every t.
  Interval support_range(const FactorSet& factors) const {
    return range([&](std::size_t k, const DefaultMap& map) {
      const Interval support = factors[k].law.support();
      const Interval image = map.factor_image();
      return Interval{std::max(support.lo, image.lo), std::min(support.hi, image.hi)};
    });
  }

  void check_factor_indices(std::size_t n_factors) const {
    if (kind_ == Kind::leaf) {
      if (factor_ >= n_factors) throw InputError("default time refers to factor " + std::to_string(factor_) + " of " + std::to_string(n_factors));
      return;
    }
    for (const auto& c : children_) c.check_factor_indices(n_factors);
  }

private:
  explicit TimeExpr(Kind kind) : kind_(kind) {}

  static TimeExpr combine(Kind kind, std::vector<TimeExpr> terms, std::vector<double> weights) {
    if (terms.empty()) throw InputError("combined default time needs at least one term");
    TimeExpr e(kind);
    e.children_ = std::move(terms);
    e.weights_ = std::move(weights);
    return e;
  }

  // box(k, map) gives the factor interval of a leaf.
  template <class Box>
  Interval range(const Box& box) const {
    switch (kind_) {
      case Kind::leaf:
        return map_->preimage_of(box(factor_, *map_));
      case Kind::min:
      case Kind::max: {
        Interval out = children_.front().range(box);
        for (std::size_t i = 1; i < children_.size(); ++i) {
          const Interval r = children_[i].range(box);
          out = kind_ == Kind::min ? Interval{std::min(out.lo, r.lo), std::min(out.hi, r.hi)}
                                   : Interval{std::max(out.lo, r.lo), std::max(out.hi, r.hi)};
        }
        return out;
      }
      case Kind::weighted: {
        Interval out{0.0, 0.0};
        for (std::size_t i = 0; i < children_.size(); ++i) {
          const Interval r = children_[i].range(box);
          out.lo += weights_[i] * r.lo;
          out.hi += weights_[i] * r.hi;
        }
        return out;
      }
    }
    return {};
  }

  Kind kind_;
  std::size_t factor_ = 0;
  std::shared_ptr<const DefaultMap> map_;
  std::vector<TimeExpr> children_;
  std::vector<double> weights_;
};

/// Default times of the n names in a basket.
class NameMap {
public:
  NameMap(std::vector<TimeExpr> names, const FactorSet& factors) : names_(std::move(names)) {
    if (names_.empty()) throw InputError("name map: need at least one name");
    for (std::size_t a = 0; a < names_.size(); ++a) {
      const auto& e = names_[a];
      e.check_factor_indices(factors.size());
      const Interval r = e.truncated_range(factors);
      if (!(r.lo > 0.0) || std::isnan(r.lo))
        throw InputError("name " + std::to_string(a) + ": default time can be <= 0 on the factor support");
      if (std::isfinite(e.support_range(factors).hi))
        throw InputError("name " + std::to_string(a) + ": default time is bounded, so Q(tau > t) = 0 for large t");
    }
  }

  std::size_t size() const { return names_.size(); }
  const TimeExpr& operator[](std::size_t a) const { return names_.at(a); }

private:
  std::vector<TimeExpr> names_;
};

struct BasketSpec {
  std::size_t k = 1;
  double payoff = 1.0;
  double horizon = 1.0;

  void validate(std::size_t n_names) const {
    if (k < 1 || k > n_names) throw InputError("basket: k must lie in 1..n");
    if (!std::isfinite(payoff)) throw InputError("basket: payoff must be finite");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("basket: horizon must be > 0");
  }
};

/// Draws every factor from its law (one uniform per factor, inverse CDF,
/// factor order) and maps them to the names' default times.
inline std::vector<double> sample_default_vector(const FactorSet& factors, const NameMap& names, Rng& rng) {
  std::vector<double> x(factors.size());
  for (std::size_t k = 0; k < factors.size(); ++k) x[k] = factors[k].law.quantile(rng.uniform());
  std::vector<double> tau(names.size());
  for (std::size_t a = 0; a < names.size(); ++a) {
    tau[a] = names[a].evaluate(x);
    if (!(tau[a] > 0.0) || !std::isfinite(tau[a]))
      throw NumericalError("name " + std::to_string(a) + ": sampled default time " + std::to_string(tau[a]) +
                           " is not a positive finite time");
  }
  return tau;
}

inline std::vector<double> sample_default_vector(const FactorSet& factors, const NameMap& names, Seed seed) {
  Rng rng(seed);
  return sample_default_vector(factors, names, rng);
}

struct MonteCarloEstimate {
  double price = 0.0;
  double standard_error = 0.0;
  std::size_t n_paths = 0;
};

namespace detail {

/// Per-path default indicators 1{tau_a <= horizon}, row-major [path][name].
inline std::vector<std::uint8_t> default_indicators(const FactorSet& factors, const NameMap& names, double horizon,
                                                    std::size_t n_paths, Seed seed, unsigned threads) {
  std::vector<std::uint8_t> out(n_paths * names.size());
  parallel_for(n_paths, worker_count(threads), [&](std::size_t p) {
    Rng rng(seed, p);
    const auto tau = sample_default_vector(factors, names, rng);
    for (std::size_t a = 0; a < tau.size(); ++a) out[p * names.size() + a] = tau[a] <= horizon ? 1 : 0;
  });
  return out;
}

} // namespace detail

/// Time-0 price of K paid at T when at least k names have defaulted by T:
/// P_0T K Q(tau_(k) <= T), estimated on n_paths draws.
inline MonteCarloEstimate kth_to_default_price(const FactorSet& factors, const NameMap& names,
                                               const BasketSpec& basket, const TermStructure& curve,
                                               std::size_t n_paths, Seed seed, unsigned threads = 0) {
  basket.validate(names.size());
  if (n_paths < 2) throw InputError("kth_to_default_price: need at least 2 paths");
  const auto hits = detail::default_indicators(factors, names, basket.horizon, n_paths, seed, threads);
  std::size_t triggered = 0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    std::size_t defaults = 0;
    for (std::size_t a = 0; a < names.size(); ++a) defaults += hits[p * names.size() + a];
    if (defaults >= basket.k) ++triggered;
  }
  const double n = static_cast<double>(n_paths);
  const double q = static_cast<double>(triggered) / n;
  const double scale = curve.discount(basket.horizon) * basket.payoff;
  return {scale * q, std::abs(scale) * std::sqrt(q * (1.0 - q) / (n - 1.0)), n_paths};
}

/// kth order statistic of a default-time vector (k counted from 1).
inline double kth_default_time(std::vector<double> tau, std::size_t k) {
  if (k < 1 || k > tau.size()) throw InputError("kth_default_time: k out of range");
  std::nth_element(tau.begin(), tau.begin() + static_cast<std::ptrdiff_t>(k - 1), tau.end());
  return tau[k - 1];
}

/// Pairwise correlations of the default indicators 1{tau_a <= T}. Entries
/// are empty when an indicator never or always fires in the sample.
class CorrelationMatrix {
public:
  explicit CorrelationMatrix(std::size_t n) : n_(n), entries_(n * n) {}
  std::size_t size() const { return n_; }
  std::optional<double> operator()(std::size_t i, std::size_t j) const { return entries_.at(i * n_ + j); }
  std::optional<double>& at(std::size_t i, std::size_t j) { return entries_.at(i * n_ + j); }

private:
  std::size_t n_;
  std::vector<std::optional<double>> entries_;
};

inline CorrelationMatrix default_correlation(const FactorSet& factors, const NameMap& names, double horizon,
                                             std::size_t n_paths, Seed seed, unsigned threads = 0) {
  const std::size_t n = names.size();
  if (n < 2) throw InputError("default_correlation: need at least two names");
  if (n_paths < 2) throw InputError("default_correlation: need at least 2 paths");
  const auto hits = detail::default_indicators(factors, names, horizon, n_paths, seed, threads);

  // Integer co-default counts give exact results for identical columns.
  std::vector<double> ones(n, 0.0);
  std::vector<double> both(n * n, 0.0);
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t i = 0; i < n; ++i) {
      if (!hits[p * n + i]) continue;
      ones[i] += 1.0;
      for (std::size_t j = 0; j < n; ++j) both[i * n + j] += hits[p * n + j];
    }
  const double total = static_cast<double>(n_paths);
  CorrelationMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double vi = ones[i] * (total - ones[i]);
      const double vj = ones[j] * (total - ones[j]);
      if (vi == 0.0 || vj == 0.0) continue;
      if (i == j) {
        out.at(i, j) = 1.0;
        continue;
      }
      const double cov = both[i * n + j] * total - ones[i] * ones[j];
      out.at(i, j) = std::clamp(cov / (std::sqrt(vi) * std::sqrt(vj)), -1.0, 1.0);
    }
  return out;
}

} // namespace infocredit
