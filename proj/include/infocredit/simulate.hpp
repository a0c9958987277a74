#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bond.hpp"
#include "random.hpp"

namespace infocredit {

/// Uniform time grid 0 = t_0 < ... < t_n = t_max.
struct GridSpec {
  double t_max = 1.0;
  std::size_t n_steps = 500;

  void validate() const {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("grid: t_max must be > 0");
    if (n_steps == 0) throw InputError("grid: n_steps must be positive");
  }
  double dt() const { return t_max / static_cast<double>(n_steps); }
  double time(std::size_t i) const { return i == n_steps ? t_max : static_cast<double>(i) * dt(); }
  std::vector<double> times() const {
    std::vector<double> out(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) out[i] = time(i);
    return out;
  }
};

/// Which per-step series to evaluate. Bond prices, hazards and innovations
/// each cost quadratures at every surviving grid point.
struct SimulationOptions {
  bool bond_prices = true;
  bool hazards = true;
  bool innovations = true;
  /// 0 selects INFOCREDIT_THREADS if set, else the hardware concurrency.
  unsigned threads = 0;
};

struct SamplePath {
  double x_draw = 0.0;
  double tau = 0.0;
  std::vector<double> xi;
  std::vector<std::uint8_t> survived;
  std::vector<double> bond_price;  // empty when not evaluated
  std::vector<double> hazard;      // NaN after default; empty when not evaluated
  std::vector<double> innovation;  // frozen after default; empty when not evaluated

  friend bool operator==(const SamplePath&, const SamplePath&) = default;
};

struct PathEnsemble {
  GridSpec grid;
  std::vector<double> times;
  Seed seed;
  std::vector<SamplePath> paths;

  std::size_t size() const { return paths.size(); }
};

/// Numerical failure inside the simulation, tagged with where it happened.
class SimulationError : public NumericalError {
public:
  SimulationError(const std::string& what, std::size_t path, std::size_t step)
      : NumericalError(what + " (path " + std::to_string(path) + ", step " + std::to_string(step) + ")"),
        path_(path), step_(step) {}
  std::size_t path() const noexcept { return path_; }
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t path_;
  std::size_t step_;
};

inline unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("INFOCREDIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) over contiguous blocks. Results must be
/// written to index-owned slots; the exception from the lowest failing block
/// is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Innovation increments for one path: W_{i+1} = W_i + 1{tau > t_i}
/// (xi_{i+1} - xi_i - sigma E[X | xi_{t_i}, tau > t_i] dt).
inline std::vector<double> innovation_path(const InfoModel& model, const std::vector<double>& times,
                                           const SamplePath& path, std::size_t path_index = 0) {
  const std::size_t n = times.size();
  if (path.xi.size() != n || path.survived.size() != n) throw InputError("innovation_path: path/grid size mismatch");
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!path.survived[i]) {
      w[i + 1] = w[i];
      continue;
    }
    double drift = 0.0;
    if (model.sigma() > 0.0) {
      try {
        drift = model.sigma() * posterior_factor_mean(model, {times[i], path.xi[i], true}, times[i]);
      } catch (const NumericalError& e) {
        throw SimulationError(e.what(), path_index, i);
      }
    }
    w[i + 1] = w[i] + (path.xi[i + 1] - path.xi[i]) - drift * (times[i + 1] - times[i]);
  }
  return w;
}

inline std::vector<double> innovation_path(const InfoModel& model, const PathEnsemble& ensemble,
                                           std::size_t path_index) {
  return innovation_path(model, ensemble.times, ensemble.paths.at(path_index), path_index);
}

/// Monte Carlo paths of the information process and the quantities it drives.
///
/// Path i draws from its own stream Rng(seed, i): one uniform for the default
/// time (inverse CDF of the prior), then one normal per step for the exact
/// Brownian increments. Prices are evaluated on the grid and are zero from the
/// first grid time >= tau.
inline PathEnsemble simulate_paths(const InfoModel& model, const TermStructure& curve, const BondSpec& spec,
                                   const GridSpec& grid, std::size_t n_paths, Seed seed,
                                   const SimulationOptions& options = {}) {
  grid.validate();
  spec.validate();
  if (n_paths == 0) throw InputError("simulate_paths: n_paths must be >= 1");
  if (grid.t_max > spec.maturity) throw InputError("simulate_paths: grid extends beyond bond maturity");
  const bool zero_recovery = spec.recovery == 0.0;

  PathEnsemble out{grid, grid.times(), seed, std::vector<SamplePath>(n_paths)};
  const auto& times = out.times;
  const std::size_t n = times.size();
  const double sqrt_dt = std::sqrt(grid.dt());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  parallel_for(n_paths, worker_count(options.threads), [&](std::size_t p) {
    SamplePath& path = out.paths[p];
    Rng rng(seed, p);
    path.tau = model.prior().quantile(rng.uniform());
    path.x_draw = model.map().phi(path.tau);

    path.xi.assign(n, 0.0);
    path.survived.assign(n, 0);
    double brownian = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) brownian += sqrt_dt * rng.normal();
      path.xi[i] = model.sigma() * times[i] * path.x_draw + brownian;
      path.survived[i] = path.tau > times[i] ? 1 : 0;
    }

    if (options.bond_prices) path.bond_price.assign(n, 0.0);
    if (options.hazards) path.hazard.assign(n, nan);
    for (std::size_t i = 0; i < n && (options.bond_prices || options.hazards); ++i) {
      const InformationState state{times[i], path.xi[i], path.survived[i] != 0};
      try {
        if (options.bond_prices)
          path.bond_price[i] = zero_recovery ? bond_price(model, curve, state, spec)
                                             : recovery_bond_price(model, curve, state, spec);
        if (options.hazards && state.survived) path.hazard[i] = hazard_rate(model, state);
      } catch (const NumericalError& e) {
        throw SimulationError(e.what(), p, i);
      }
    }
    if (options.innovations) path.innovation = innovation_path(model, times, path, p);
  });
  return out;
}

namespace detail {

inline void write_number(std::ostream& os, double v) {
  if (std::isnan(v)) return;  // empty field
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

} // namespace detail

/// One row per (path, grid time): path,t,xi,survived,bond_price,hazard,W.
/// Series that were not evaluated (and hazards after default) are empty fields.
inline void write_ensemble_csv(std::ostream& os, const PathEnsemble& ensemble) {
  os << "path,t,xi,survived,bond_price,hazard,W\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    const auto& path = ensemble.paths[p];
    for (std::size_t i = 0; i < ensemble.times.size(); ++i) {
      os << p << ',';
      detail::write_number(os, ensemble.times[i]);
      os << ',';
      detail::write_number(os, path.xi[i]);
      os << ',' << static_cast<int>(path.survived[i]) << ',';
      detail::write_number(os, path.bond_price.empty() ? nan : path.bond_price[i]);
      os << ',';
      detail::write_number(os, path.hazard.empty() ? nan : path.hazard[i]);
      os << ',';
      detail::write_number(os, path.innovation.empty() ? nan : path.innovation[i]);
      os << '\n';
    }
  }
}

} // namespace infocredit
