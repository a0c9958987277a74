#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <json.hpp>

#include "option.hpp"
#include "portfolio.hpp"
#include "simulate.hpp"
#include "svg.hpp"

namespace infocredit::app {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, internal = 1, schema = 2, numerical = 3, io = 4 };

/// Configuration that does not match the schema.
class ConfigError : public InputError {
public:
  using InputError::InputError;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"density", "bond", "hazard", "simulate", "option", "implied-sigma", "basket"};
  return names;
}

namespace detail {

/// Strict view of one JSON object: every key must be consumed.
class Reader {
public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!has(key)) fail("missing required key '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) { return as_number(raw(key), path(key)); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t count(const std::string& key) { return as_count(raw(key), path(key)); }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) { return has(key) ? count(key) : fallback; }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }

  Reader object(const std::string& key) { return Reader(raw(key), path(key)); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) fail("unknown key '" + item.key() + "'");
  }

  std::string path(const std::string& key) const { return where_ + "/" + key; }
  const std::string& where() const { return where_; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError((where_.empty() ? "/" : where_) + ": " + what); }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + ": expected a finite number");
    return x;
  }

  static std::uint64_t as_count(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where + ": expected a nonnegative integer");
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

enum class Type { number, count, flag, numbers };

struct Param {
  const char* key;
  Type type;
  json fallback;  // null: required
};

inline const std::map<std::string, std::vector<Param>>& command_params() {
  static const std::map<std::string, std::vector<Param>> table{
      {"density", {{"t", Type::number, 0.5}, {"xi", Type::number, 0.0}, {"points", Type::count, 201}}},
      {"bond",
       {{"t", Type::number, 0.0},
        {"xi", Type::number, 0.0},
        {"maturities", Type::numbers, json::array({1.0})},
        {"principal", Type::number, 1.0},
        {"recovery", Type::number, 0.0}}},
      {"hazard",
       {{"t", Type::number, 0.0}, {"xi", Type::number, 0.0}, {"horizon", Type::number, 2.0}, {"points", Type::count, 101}}},
      {"simulate",
       {{"maturity", Type::number, 1.0},
        {"principal", Type::number, 1.0},
        {"recovery", Type::number, 0.0},
        {"bond_prices", Type::flag, true},
        {"hazards", Type::flag, true},
        {"innovations", Type::flag, true}}},
      {"option",
       {{"strikes", Type::numbers, json::array({0.5, 0.6, 0.7, 0.8, 0.9})},
        {"expiries", Type::numbers, json::array({1.0, 2.0, 3.0, 4.0})},
        {"bond_maturity", Type::number, 5.0},
        {"oracle", Type::flag, false}}},
      {"implied-sigma",
       {{"strike", Type::number, nullptr},
        {"expiry", Type::number, nullptr},
        {"bond_maturity", Type::number, 5.0},
        {"price", Type::number, nullptr},
        {"sigma_max", Type::number, 2.0},
        {"grid_points", Type::count, 41}}},
      {"basket", {{"k", Type::count, 1}, {"payoff", Type::number, 1.0}, {"horizon", Type::number, 1.0}}},
  };
  return table;
}

inline json resolve_param(Reader& r, const Param& p) {
  if (!r.has(p.key)) {
    if (p.fallback.is_null()) r.fail(std::string("missing required key '") + p.key + "'");
    return p.fallback;
  }
  const std::string where = r.path(p.key);
  const json& v = r.raw(p.key);
  switch (p.type) {
    case Type::number:
      return Reader::as_number(v, where);
    case Type::count:
      return Reader::as_count(v, where);
    case Type::flag:
      if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
      return v;
    case Type::numbers: {
      if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a nonempty array of numbers");
      json out = json::array();
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Reader::as_number(v[i], where + "/" + std::to_string(i)));
      return out;
    }
  }
  return nullptr;
}

inline const std::map<std::string, std::vector<std::string>>& law_params() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"exponential", {"rate"}}, {"gamma", {"shape", "rate"}}, {"lognormal", {"mu", "s"}},
      {"normal", {"mean", "sd"}}, {"uniform", {"lo", "hi"}},
  };
  return table;
}

inline json resolve_law(const json& j, const std::string& where) {
  Reader r(j, where);
  const std::string family = r.text("family");
  const auto it = law_params().find(family);
  if (it == law_params().end())
    throw ConfigError(r.path("family") + ": unknown family '" + family +
                      "' (exponential, gamma, lognormal, normal, uniform)");
  json out{{"family", family}};
  for (const auto& key : it->second) out[key] = r.number(key);
  r.finish();
  return out;
}

inline json resolve_phi(const json& j, const std::string& where) {
  Reader r(j, where);
  const std::string form = r.text("form");
  json out{{"form", form}};
  if (form == "exp_decay" || form == "exp_growth") {
    out["a"] = r.number("a");
  } else if (form == "linear" || form == "power") {
    out["a"] = r.number("a");
    out["b"] = r.number("b");
  } else {
    throw ConfigError(r.path("form") + ": unknown form '" + form + "' (exp_decay, exp_growth, linear, power)");
  }
  r.finish();
  return out;
}

inline json resolve_curve(const json& j, const std::string& where) {
  Reader r(j, where);
  json out;
  if (r.has("flat_rate") == r.has("table")) r.fail("give exactly one of 'flat_rate' or 'table'");
  if (r.has("flat_rate")) {
    out["flat_rate"] = r.number("flat_rate");
  } else {
    const json& table = r.raw("table");
    const std::string at = r.path("table");
    if (!table.is_array() || table.empty()) throw ConfigError(at + ": expected a nonempty array of [t, P] pairs");
    json rows = json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const std::string row_at = at + "/" + std::to_string(i);
      if (!table[i].is_array() || table[i].size() != 2) throw ConfigError(row_at + ": expected [t, P]");
      rows.push_back(json::array({Reader::as_number(table[i][0], row_at + "/0"), Reader::as_number(table[i][1], row_at + "/1")}));
    }
    out["table"] = rows;
  }
  r.finish();
  return out;
}

inline json resolve_expr(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw ConfigError(where + ": expected one of {leaf|min|max|weighted: ...}");
  const auto& [kind, body] = *j.items().begin();
  const std::string at = where + "/" + kind;
  if (kind == "leaf") {
    Reader r(body, at);
    json leaf{{"factor", r.count("factor")}, {"phi", resolve_phi(r.raw("phi"), r.path("phi"))}};
    r.finish();
    return json{{"leaf", leaf}};
  }
  if (kind == "min" || kind == "max") {
    if (!body.is_array() || body.empty()) throw ConfigError(at + ": expected a nonempty array");
    json terms = json::array();
    for (std::size_t i = 0; i < body.size(); ++i) terms.push_back(resolve_expr(body[i], at + "/" + std::to_string(i)));
    return json{{kind, terms}};
  }
  if (kind == "weighted") {
    if (!body.is_array() || body.empty()) throw ConfigError(at + ": expected a nonempty array");
    json terms = json::array();
    for (std::size_t i = 0; i < body.size(); ++i) {
      Reader r(body[i], at + "/" + std::to_string(i));
      terms.push_back(json{{"weight", r.number("weight")}, {"term", resolve_expr(r.raw("term"), r.path("term"))}});
      r.finish();
    }
    return json{{"weighted", terms}};
  }
  throw ConfigError(at + ": unknown expression kind (leaf, min, max, weighted)");
}

inline json resolve_model(const json& j, bool basket) {
  Reader r(j, "/model");
  json out;
  if (basket) {
    for (const char* key : {"prior", "phi", "sigma"})
      if (r.has(key)) r.fail(std::string("'") + key + "' is not used by the basket command");
    const json& factors = r.raw("factors");
    if (!factors.is_array() || factors.empty()) throw ConfigError("/model/factors: expected a nonempty array");
    json fs = json::array();
    for (std::size_t i = 0; i < factors.size(); ++i) {
      Reader fr(factors[i], "/model/factors/" + std::to_string(i));
      fs.push_back(json{{"law", resolve_law(fr.raw("law"), fr.path("law"))}, {"sigma", fr.number("sigma", 0.0)}});
      fr.finish();
    }
    const json& names = r.raw("names");
    if (!names.is_array() || names.empty()) throw ConfigError("/model/names: expected a nonempty array");
    json ns = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) ns.push_back(resolve_expr(names[i], "/model/names/" + std::to_string(i)));
    out["factors"] = fs;
    out["names"] = ns;
  } else {
    for (const char* key : {"factors", "names"})
      if (r.has(key)) r.fail(std::string("'") + key + "' is only used by the basket command");
    if (r.has("prior")) {
      Reader pr(r.raw("prior"), "/model/prior");
      if (pr.has("factor")) {
        json law = resolve_law(pr.raw("factor"), pr.path("factor"));
        pr.finish();
        out["prior"] = json{{"factor", law}};
      } else {
        out["prior"] = resolve_law(r.raw("prior"), "/model/prior");
      }
    } else {
      out["prior"] = json{{"family", "exponential"}, {"rate", 0.1}};
    }
    out["phi"] = resolve_phi(r.raw("phi"), "/model/phi");
    out["sigma"] = r.number("sigma");
  }
  out["curve"] = resolve_curve(r.raw("curve"), "/model/curve");
  r.finish();
  return out;
}

inline json resolve_numerics(const json& j, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> paths) {
  Reader r(j, "/numerics");
  const Tolerances defaults;
  json tol{{"quad_rel_tol", defaults.quad_rel_tol}, {"root_abs_tol", defaults.root_abs_tol}, {"tail_mass", defaults.tail_mass}};
  if (r.has("tolerances")) {
    Reader tr = r.object("tolerances");
    for (const char* key : {"quad_rel_tol", "root_abs_tol", "tail_mass"}) tol[key] = tr.number(key, tol[key].get<double>());
    tr.finish();
  }
  const GridSpec grid_defaults;
  json grid{{"t_max", grid_defaults.t_max}, {"n_steps", grid_defaults.n_steps}};
  if (r.has("grid")) {
    Reader gr = r.object("grid");
    grid["t_max"] = gr.number("t_max", grid_defaults.t_max);
    grid["n_steps"] = gr.count("n_steps", grid_defaults.n_steps);
    gr.finish();
  }
  json out{{"tolerances", tol}, {"grid", grid}, {"n_paths", r.count("n_paths", 1000)}, {"seed", r.count("seed", 0)},
           {"stream_id", r.count("stream_id", 0)}};
  r.finish();
  if (seed) out["seed"] = *seed;
  if (paths) out["n_paths"] = *paths;
  return out;
}

} // namespace detail

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
};

/// Validates a configuration document for `command`, fills defaults and
/// applies flag overrides. The result is the canonical form written to
/// run_meta.json; resolving it again is the identity.
inline json resolve(const json& config, const std::string& command, const Overrides& overrides = {}) {
  const auto params = detail::command_params().find(command);
  if (params == detail::command_params().end()) throw ConfigError("unknown command '" + command + "'");
  detail::Reader root(config, "");
  if (root.has("meta")) root.raw("meta");

  json cmd{{"name", command}};
  const json empty = json::object();
  detail::Reader cr(root.has("command") ? root.raw("command") : empty, "/command");
  if (cr.has("name")) {
    const std::string named = cr.text("name");
    if (named != command) cr.fail("config is for command '" + named + "', not '" + command + "'");
  }
  for (const auto& p : params->second) cmd[p.key] = detail::resolve_param(cr, p);
  cr.finish();

  json out;
  out["model"] = detail::resolve_model(root.raw("model"), command == "basket");
  out["command"] = cmd;
  out["numerics"] = detail::resolve_numerics(root.has("numerics") ? root.raw("numerics") : empty, overrides.seed,
                                             overrides.paths);
  root.finish();
  return out;
}

inline Tolerances tolerances_from(const json& resolved) {
  const json& t = resolved.at("numerics").at("tolerances");
  Tolerances tol{t.at("quad_rel_tol").get<double>(), t.at("root_abs_tol").get<double>(), t.at("tail_mass").get<double>()};
  tol.validate();
  return tol;
}

inline Distribution law_from(const json& j) {
  const std::string family = j.at("family");
  auto p = [&](const char* key) { return j.at(key).get<double>(); };
  if (family == "exponential") return Distribution::exponential(p("rate"));
  if (family == "gamma") return Distribution::gamma(p("shape"), p("rate"));
  if (family == "lognormal") return Distribution::lognormal(p("mu"), p("s"));
  if (family == "normal") return Distribution::normal(p("mean"), p("sd"));
  return Distribution::uniform(p("lo"), p("hi"));
}

inline DefaultMap map_from(const json& j) {
  const std::string form = j.at("form");
  const double a = j.at("a").get<double>();
  if (form == "exp_decay") return DefaultMap::exp_decay(a);
  if (form == "exp_growth") return DefaultMap::exp_growth(a);
  if (form == "linear") return DefaultMap::linear(a, j.at("b").get<double>());
  return DefaultMap::power(a, j.at("b").get<double>());
}

inline TermStructure curve_from(const json& j) {
  if (j.contains("flat_rate")) return TermStructure::flat(j.at("flat_rate").get<double>());
  std::vector<std::pair<double, double>> nodes;
  for (const auto& row : j.at("table")) nodes.emplace_back(row[0].get<double>(), row[1].get<double>());
  return TermStructure::from_table(std::move(nodes));
}

inline InfoModel model_from(const json& resolved) {
  const json& m = resolved.at("model");
  const Tolerances tol = tolerances_from(resolved);
  DefaultMap map = map_from(m.at("phi"));
  const json& prior = m.at("prior");
  PriorDensity p = prior.contains("factor") ? PriorDensity::of_factor(law_from(prior.at("factor")), map, tol)
                                            : PriorDensity::of_default_time(law_from(prior), tol);
  return InfoModel(m.at("sigma").get<double>(), std::move(p), std::move(map), tol);
}

inline TimeExpr expr_from(const json& j) {
  const auto& [kind, body] = *j.items().begin();
  if (kind == "leaf") return TimeExpr::leaf(body.at("factor").get<std::size_t>(), map_from(body.at("phi")));
  if (kind == "weighted") {
    std::vector<std::pair<double, TimeExpr>> terms;
    for (const auto& t : body) terms.emplace_back(t.at("weight").get<double>(), expr_from(t.at("term")));
    return TimeExpr::weighted(std::move(terms));
  }
  std::vector<TimeExpr> terms;
  for (const auto& t : body) terms.push_back(expr_from(t));
  return kind == "min" ? TimeExpr::min(std::move(terms)) : TimeExpr::max(std::move(terms));
}

/// Files produced by one command, before they are written.
struct Artifacts {
  std::string results_csv;
  std::optional<svg::Chart> chart;
};

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  infocredit::detail::write_number(os, v);
  return os.str();
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw ConfigError("/command/points: need at least 2 points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

inline std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

inline Artifacts run_density(const json& cfg, const InfoModel& model) {
  const json& c = cfg.at("command");
  const InformationState state{c.at("t").get<double>(), c.at("xi").get<double>(), true};
  const Interval xs = model.phi_range();
  std::ostringstream csv;
  csv << "x,prior_density,posterior_density\n";
  svg::Series s{"posterior density", {}, {}};
  for (double x : linspace(xs.lo, xs.hi, c.at("points").get<std::size_t>())) {
    const double prior = factor_prior_density(model, x);
    const double post = conditional_density(model, state, x);
    csv << num(x) << ',' << num(prior) << ',' << num(post) << '\n';
    s.x.push_back(x);
    s.y.push_back(post);
  }
  return {csv.str(), svg::Chart{"Posterior factor density", "x", "density", {s}}};
}

inline Artifacts run_bond(const json& cfg, const InfoModel& model, const TermStructure& curve) {
  const json& c = cfg.at("command");
  const InformationState state{c.at("t").get<double>(), c.at("xi").get<double>(), true};
  std::ostringstream csv;
  csv << "t,xi,T,price,volatility\n";
  svg::Series s{"bond price", {}, {}};
  for (double T : doubles(c.at("maturities"))) {
    const BondSpec spec{T, c.at("principal").get<double>(), c.at("recovery").get<double>()};
    const double price = spec.recovery == 0.0 ? bond_price(model, curve, state, spec)
                                              : recovery_bond_price(model, curve, state, spec);
    const double vol = bond_volatility(model, state, T);
    csv << num(state.t) << ',' << num(state.xi) << ',' << num(T) << ',' << num(price) << ',' << num(vol) << '\n';
    s.x.push_back(T);
    s.y.push_back(price);
  }
  return {csv.str(), svg::Chart{"Bond price by maturity", "T", "price", {s}}};
}

inline Artifacts run_hazard(const json& cfg, const InfoModel& model) {
  const json& c = cfg.at("command");
  const InformationState state{c.at("t").get<double>(), c.at("xi").get<double>(), true};
  const double horizon = c.at("horizon").get<double>();
  if (!(horizon > 0.0)) throw ConfigError("/command/horizon: must be > 0");
  std::ostringstream csv;
  csv << "u,forward_hazard,survival\n";
  svg::Series s{"forward hazard", {}, {}};
  for (double u : linspace(state.t, state.t + horizon, c.at("points").get<std::size_t>())) {
    const double h = forward_hazard(model, state, u);
    csv << num(u) << ',' << num(h) << ',' << num(posterior_survival(model, state, u)) << '\n';
    s.x.push_back(u);
    s.y.push_back(h);
  }
  return {csv.str(), svg::Chart{"Forward hazard rate", "u", "h(t, u)", {s}}};
}

inline constexpr std::size_t kMaxPlottedPaths = 50;

inline Artifacts run_simulate(const json& cfg, const InfoModel& model, const TermStructure& curve) {
  const json& c = cfg.at("command");
  const json& n = cfg.at("numerics");
  const BondSpec spec{c.at("maturity").get<double>(), c.at("principal").get<double>(), c.at("recovery").get<double>()};
  const GridSpec grid{n.at("grid").at("t_max").get<double>(), n.at("grid").at("n_steps").get<std::size_t>()};
  SimulationOptions options;
  options.bond_prices = c.at("bond_prices").get<bool>();
  options.hazards = c.at("hazards").get<bool>();
  options.innovations = c.at("innovations").get<bool>();
  const Seed seed{n.at("seed").get<std::uint64_t>(), n.at("stream_id").get<std::uint64_t>()};
  const auto ensemble = simulate_paths(model, curve, spec, grid, n.at("n_paths").get<std::size_t>(), seed, options);

  std::ostringstream csv;
  write_ensemble_csv(csv, ensemble);
  svg::Chart chart{"Simulated bond price paths", "t", "B(t, T)", {}, true};
  if (options.bond_prices)
    for (std::size_t p = 0; p < ensemble.size() && p < kMaxPlottedPaths; ++p)
      chart.series.push_back({"path " + std::to_string(p), ensemble.times, ensemble.paths[p].bond_price});
  return {csv.str(), chart};
}

inline Artifacts run_option(const json& cfg, const InfoModel& model, const TermStructure& curve) {
  const json& c = cfg.at("command");
  const bool oracle = c.at("oracle").get<bool>();
  const double T = c.at("bond_maturity").get<double>();
  std::ostringstream csv;
  csv << "t,K,call_price" << (oracle ? ",oracle_price" : "") << '\n';
  svg::Chart chart{"Call price by strike", "K", "C(0)", {}};
  for (double t : doubles(c.at("expiries"))) {
    svg::Series s{"t = " + num(t), {}, {}};
    for (double K : doubles(c.at("strikes"))) {
      const OptionSpec spec{K, t, T};
      const double price = call_price(model, curve, spec);
      csv << num(t) << ',' << num(K) << ',' << num(price);
      if (oracle) csv << ',' << num(call_price_oracle(model, curve, spec));
      csv << '\n';
      s.x.push_back(K);
      s.y.push_back(price);
    }
    chart.series.push_back(std::move(s));
  }
  return {csv.str(), chart};
}

inline Artifacts run_implied_sigma(const json& cfg, const InfoModel& model, const TermStructure& curve) {
  const json& c = cfg.at("command");
  const OptionSpec spec{c.at("strike").get<double>(), c.at("expiry").get<double>(), c.at("bond_maturity").get<double>()};
  const double observed = c.at("price").get<double>();
  const double sigma_max = c.at("sigma_max").get<double>();
  const auto points = c.at("grid_points").get<std::size_t>();
  const double sigma = implied_sigma(model, curve, spec, observed, sigma_max, points);
  std::ostringstream csv;
  csv << "t,K,T,observed_price,implied_sigma\n"
      << num(spec.expiry) << ',' << num(spec.strike) << ',' << num(spec.bond_maturity) << ',' << num(observed) << ','
      << num(sigma) << '\n';
  svg::Series s{"call price", {}, {}};
  for (double v : linspace(0.0, sigma_max, points)) {
    s.x.push_back(v);
    s.y.push_back(call_price(model.with_sigma(v), curve, spec));
  }
  return {csv.str(), svg::Chart{"Call price by information flow rate", "sigma", "C(0)", {s}}};
}

inline Artifacts run_basket(const json& cfg, bool plot) {
  const json& m = cfg.at("model");
  const json& c = cfg.at("command");
  const json& n = cfg.at("numerics");
  std::vector<Factor> factors;
  for (const auto& f : m.at("factors")) factors.push_back({law_from(f.at("law")), f.at("sigma").get<double>()});
  const FactorSet set(std::move(factors), tolerances_from(cfg));
  std::vector<TimeExpr> exprs;
  for (const auto& e : m.at("names")) exprs.push_back(expr_from(e));
  const NameMap names(std::move(exprs), set);
  const TermStructure curve = curve_from(m.at("curve"));
  const Seed seed{n.at("seed").get<std::uint64_t>(), n.at("stream_id").get<std::uint64_t>()};
  const auto n_paths = n.at("n_paths").get<std::size_t>();
  const BasketSpec basket{c.at("k").get<std::size_t>(), c.at("payoff").get<double>(), c.at("horizon").get<double>()};
  const auto est = kth_to_default_price(set, names, basket, curve, n_paths, seed);

  std::ostringstream csv;
  csv << "k,horizon,price,standard_error,n_paths\n"
      << basket.k << ',' << num(basket.horizon) << ',' << num(est.price) << ',' << num(est.standard_error) << ','
      << est.n_paths << '\n';
  Artifacts out{csv.str(), std::nullopt};
  if (plot) {
    svg::Series s{"price", {}, {}};
    for (std::size_t k = 1; k <= names.size(); ++k) {
      BasketSpec each = basket;
      each.k = k;
      s.x.push_back(static_cast<double>(k));
      s.y.push_back(kth_to_default_price(set, names, each, curve, n_paths, seed).price);
    }
    out.chart = svg::Chart{"kth-to-default price", "k", "price", {s}};
  }
  return out;
}

} // namespace detail

/// Runs one command on a resolved configuration.
inline Artifacts execute(const json& resolved, bool plot = false) {
  const std::string command = resolved.at("command").at("name");
  if (command == "basket") return detail::run_basket(resolved, plot);
  const InfoModel model = model_from(resolved);
  const TermStructure curve = curve_from(resolved.at("model").at("curve"));
  if (command == "density") return detail::run_density(resolved, model);
  if (command == "bond") return detail::run_bond(resolved, model, curve);
  if (command == "hazard") return detail::run_hazard(resolved, model);
  if (command == "simulate") return detail::run_simulate(resolved, model, curve);
  if (command == "option") return detail::run_option(resolved, model, curve);
  return detail::run_implied_sigma(resolved, model, curve);
}

/// Writes `content` to a temporary sibling and renames it over `target`.
inline void write_atomic(const fs::path& target, const std::string& content) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }
}

inline json run_meta(const json& resolved) {
  json out = resolved;
  out["meta"] = json{{"command", resolved.at("command").at("name")},
                     {"seed", resolved.at("numerics").at("seed")},
                     {"stream_id", resolved.at("numerics").at("stream_id")},
                     {"versions",
                      {{"infocredit", kVersion},
                       {"boost", BOOST_LIB_VERSION},
                       {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                       {"compiler", __VERSION__}}}};
  return out;
}

inline json load_config(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

struct Request {
  std::string command;
  fs::path config;
  fs::path out_dir;
  bool plot = false;
  Overrides overrides;
};

inline json error_record(ExitCode code, const std::string& message) {
  static const std::map<int, const char*> kinds{
      {internal, "internal"}, {schema, "schema"}, {numerical, "numerical"}, {io, "io"}};
  return json{{"error", {{"kind", kinds.at(code)}, {"exit_code", static_cast<int>(code)}, {"message", message}}}};
}

/// Loads, resolves, executes and writes results.csv, run_meta.json and
/// (with plot) plot.svg. Failures print a one-line JSON error record to `err`,
/// also left as error.json in the output directory when it is writable.
inline int run(const Request& request, std::ostream& err) {
  auto fail = [&](ExitCode code, const std::string& message) {
    const json record = error_record(code, message);
    err << record.dump() << '\n';
    std::error_code ec;
    if (!request.out_dir.empty() && fs::is_directory(request.out_dir, ec)) {
      try {
        write_atomic(request.out_dir / "error.json", record.dump(2) + "\n");
      } catch (const IoError&) {
      }
    }
    return static_cast<int>(code);
  };
  try {
    const json resolved = resolve(load_config(request.config), request.command, request.overrides);
    const Artifacts artifacts = execute(resolved, request.plot);
    std::error_code ec;
    fs::create_directories(request.out_dir, ec);
    if (ec) throw IoError("cannot create " + request.out_dir.string() + ": " + ec.message());
    fs::remove(request.out_dir / "error.json", ec);
    write_atomic(request.out_dir / "results.csv", artifacts.results_csv);
    write_atomic(request.out_dir / "run_meta.json", run_meta(resolved).dump(2) + "\n");
    if (request.plot && artifacts.chart) {
      std::ostringstream os;
      svg::write(os, *artifacts.chart);
      write_atomic(request.out_dir / "plot.svg", os.str());
    }
    return ok;
  } catch (const IoError& e) {
    return fail(io, e.what());
  } catch (const InputError& e) {
    return fail(schema, e.what());
  } catch (const NumericalError& e) {
    return fail(numerical, e.what());
  } catch (const CriticalValueError& e) {
    return fail(numerical, e.what());
  } catch (const std::exception& e) {
    return fail(internal, e.what());
  }
}

} // namespace infocredit::app
