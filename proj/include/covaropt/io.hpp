#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "covaropt/backtest.hpp"
#include "covaropt/core.hpp"
#include "covaropt/econometrics.hpp"
#include "covaropt/instance.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/p1.hpp"
#include "covaropt/risk.hpp"

namespace covaropt::io {

using json = nlohmann::json;

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

inline Vector vector_from(const json& j) {
  require_dims(j.is_array(), "json: expected an array of numbers");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Matrix matrix_from(const json& j) {
  require_dims(j.is_array(), "json: expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  Matrix m(r, r ? static_cast<Index>(j[0].size()) : 0);
  for (Index i = 0; i < r; ++i) {
    const Vector row = vector_from(j[static_cast<std::size_t>(i)]);
    require_dims(row.size() == m.cols(), "json: ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

// Infinite bounds are stored as null.
inline json bound_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double bound_from(const json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }

inline json to_json(const MarketModel& m) {
  return {{"prices", to_json(m.prices())}, {"mu", to_json(m.mu())}, {"sigma", to_json(m.sigma())}, {"dt", m.dt()}};
}

inline MarketModel model_from(const json& j) {
  return MarketModel(vector_from(j.at("prices")), vector_from(j.at("mu")), matrix_from(j.at("sigma")),
                     j.at("dt").get<double>());
}

/// Distress event as stored in a document: explicit losses, or losses at
/// the VaR of confidence `p`.
struct EventSpec {
  IndexSet distressed;
  std::optional<Vector> losses;

  DistressEvent resolve(const MarketModel& model, double p_conf) const {
    if (losses) return DistressEvent::with_losses(model.size(), distressed, *losses);
    return DistressEvent::at_var(model, distressed, p_conf);
  }
};

/// Risk limits and trading bounds. Empty vectors mean the defaults of a
/// fresh long-only book.
struct Limits {
  std::vector<double> rho_bar;  ///< per event, or one shared value
  double sigma_bar = kInf;
  double k0 = 1.0;
  double u_stock = kInf;
  double u_option = kInf;
  std::optional<double> option_cap;
  Vector x0, y0;
};

/// Self-describing problem document shared by all subcommands.
struct ProblemDocument {
  MarketModel model;
  double rate = 0.05;
  std::vector<OptionContract> options;
  std::vector<ScalarGreeks> greeks;
  std::optional<Portfolio> portfolio;
  std::vector<EventSpec> events;
  Limits limits;
  std::optional<Vector> annual_vol;
  std::optional<Matrix> correlation;

  std::vector<GreekSet> greek_sets() const {
    std::vector<GreekSet> out;
    for (std::size_t j = 0; j < options.size(); ++j)
      out.push_back(GreekSet::single(model.size(), options[j].underlying, greeks[j]));
    return out;
  }

  void validate() const {
    require_dims(options.size() == greeks.size(), "document: one greek record per option");
    for (const auto& o : options) {
      o.validate();
      require_dims(o.underlying >= 0 && o.underlying < model.size(), "document: option underlying out of range");
    }
    for (const auto& e : events) {
      require_dims(!e.distressed.empty(), "document: empty distress set");
      for (Index i : e.distressed) require_dims(i >= 0 && i < model.size(), "document: distressed index out of range");
      if (e.losses) require_dims(e.losses->size() == static_cast<Index>(e.distressed.size()), "document: one loss per distressed stock");
    }
    if (portfolio) {
      require_dims(portfolio->y.size() == model.size(), "document: portfolio y has wrong size");
      require_dims(portfolio->x.size() == static_cast<Index>(options.size()), "document: portfolio x has wrong size");
    }
  }
};

inline ProblemDocument document_from(const Instance& inst) {
  ProblemDocument d{inst.model, inst.rate, inst.options, inst.option_greeks, std::nullopt, {}, {}, inst.annual_vol,
                    inst.correlation};
  return d;
}

inline const char* kind_name(OptionKind k) { return k == OptionKind::call ? "call" : "put"; }
inline const char* style_name(ExerciseStyle s) { return s == ExerciseStyle::european ? "european" : "american"; }

inline OptionKind kind_from(const std::string& s) {
  if (s == "call") return OptionKind::call;
  if (s == "put") return OptionKind::put;
  throw DomainError("json: unknown option kind '" + s + "'");
}

inline ExerciseStyle style_from(const std::string& s) {
  if (s == "european") return ExerciseStyle::european;
  if (s == "american") return ExerciseStyle::american;
  throw DomainError("json: unknown exercise style '" + s + "'");
}

inline json to_json(const ProblemDocument& d) {
  json j;
  j["model"] = to_json(d.model);
  j["rate"] = d.rate;
  j["options"] = json::array();
  for (std::size_t k = 0; k < d.options.size(); ++k) {
    const auto& o = d.options[k];
    const auto& g = d.greeks[k];
    j["options"].push_back({{"underlying", o.underlying}, {"kind", kind_name(o.kind)}, {"style", style_name(o.style)},
                            {"strike", o.strike}, {"expiry", o.expiry}, {"bid", o.bid}, {"ask", o.ask},
                            {"price", g.price}, {"delta", g.delta}, {"gamma", g.gamma}, {"theta", g.theta}});
  }
  if (d.portfolio) j["portfolio"] = {{"x", to_json(d.portfolio->x)}, {"y", to_json(d.portfolio->y)}};
  j["events"] = json::array();
  for (const auto& e : d.events) {
    json ej{{"distressed", e.distressed}};
    if (e.losses) ej["losses"] = to_json(*e.losses);
    j["events"].push_back(ej);
  }
  const Limits& l = d.limits;
  json lj{{"rho_bar", l.rho_bar}, {"sigma_bar", bound_to_json(l.sigma_bar)}, {"k0", l.k0},
          {"u_stock", bound_to_json(l.u_stock)}, {"u_option", bound_to_json(l.u_option)}};
  if (l.option_cap) lj["option_cap"] = *l.option_cap;
  if (l.x0.size()) lj["x0"] = to_json(l.x0);
  if (l.y0.size()) lj["y0"] = to_json(l.y0);
  j["limits"] = lj;
  if (d.annual_vol) j["annual_vol"] = to_json(*d.annual_vol);
  if (d.correlation) j["correlation"] = to_json(*d.correlation);
  return j;
}

inline ProblemDocument document_from(const json& j) {
  ProblemDocument d{model_from(j.at("model")), j.value("rate", 0.05), {}, {}, std::nullopt, {}, {},
                    std::nullopt, std::nullopt};
  for (const auto& oj : j.value("options", json::array())) {
    OptionContract o;
    o.underlying = oj.at("underlying").get<Index>();
    o.kind = kind_from(oj.at("kind").get<std::string>());
    o.style = style_from(oj.value("style", std::string("european")));
    o.strike = oj.at("strike").get<double>();
    o.expiry = oj.at("expiry").get<double>();
    o.bid = oj.at("bid").get<double>();
    o.ask = oj.at("ask").get<double>();
    d.options.push_back(o);
    d.greeks.push_back({oj.value("price", o.mid()), oj.at("delta").get<double>(), oj.at("gamma").get<double>(),
                        oj.value("theta", 0.0)});
  }
  if (j.contains("portfolio")) {
    const auto& pj = j["portfolio"];
    Portfolio p;
    p.y = vector_from(pj.at("y"));
    p.x = pj.contains("x") ? vector_from(pj["x"]) : Vector::Zero(static_cast<Index>(d.options.size()));
    d.portfolio = p;
  }
  for (const auto& ej : j.value("events", json::array())) {
    EventSpec e;
    e.distressed = ej.at("distressed").get<IndexSet>();
    if (ej.contains("losses")) e.losses = vector_from(ej["losses"]);
    d.events.push_back(e);
  }
  if (j.contains("limits")) {
    const auto& lj = j["limits"];
    Limits& l = d.limits;
    l.rho_bar = lj.value("rho_bar", std::vector<double>{});
    l.sigma_bar = bound_from(lj.value("sigma_bar", json(nullptr)), kInf);
    l.k0 = lj.value("k0", 1.0);
    l.u_stock = bound_from(lj.value("u_stock", json(nullptr)), kInf);
    l.u_option = bound_from(lj.value("u_option", json(nullptr)), kInf);
    if (lj.contains("option_cap")) l.option_cap = lj["option_cap"].get<double>();
    if (lj.contains("x0")) l.x0 = vector_from(lj["x0"]);
    if (lj.contains("y0")) l.y0 = vector_from(lj["y0"]);
  }
  if (j.contains("annual_vol")) d.annual_vol = vector_from(j["annual_vol"]);
  if (j.contains("correlation")) d.correlation = matrix_from(j["correlation"]);
  d.validate();
  return d;
}

/// (P1) from a document. The quoted option bid/ask enter the budget.
inline P1Problem to_p1(const ProblemDocument& d, double p_conf, double q_conf, RiskMode mode) {
  const Index n = static_cast<Index>(d.options.size());
  const Index m = d.model.size();
  P1Problem prob{d.model, d.greek_sets(), Vector(n), Vector(n), {}, Vector(), d.limits.sigma_bar, q_conf, mode,
                 Admissible::fresh(n, m, d.limits.k0, d.limits.u_stock, d.limits.u_option), d.limits.option_cap};
  prob.omega.option_cap = d.limits.option_cap;
  prob.min_return.reset();
  for (Index k = 0; k < n; ++k) {
    prob.bid(k) = d.options[static_cast<std::size_t>(k)].bid;
    prob.ask(k) = d.options[static_cast<std::size_t>(k)].ask;
  }
  if (d.limits.x0.size()) prob.omega.x0 = d.limits.x0;
  if (d.limits.y0.size()) prob.omega.y0 = d.limits.y0;
  for (const auto& e : d.events) prob.events.push_back(e.resolve(d.model, p_conf));
  const auto h = static_cast<Index>(d.events.size());
  prob.rho_bar = Vector::Constant(h, kInf);
  if (d.limits.rho_bar.size() == 1) {
    prob.rho_bar.setConstant(d.limits.rho_bar[0]);
  } else if (!d.limits.rho_bar.empty()) {
    require_dims(static_cast<Index>(d.limits.rho_bar.size()) == h, "document: one rho_bar per event");
    for (Index e = 0; e < h; ++e) prob.rho_bar(e) = d.limits.rho_bar[static_cast<std::size_t>(e)];
  }
  return prob;
}

inline json to_json(const P1Solution& s) {
  json j{{"status", to_string(s.status)}};
  if (s.optimal()) {
    j["x"] = to_json(s.x);
    j["y"] = to_json(s.y);
    j["expected_return"] = s.expected_return;
    j["std_dev"] = s.std_dev;
    j["covar"] = to_json(s.covar);
  }
  j["iterations"] = s.raw.iterations;
  j["primal_residual"] = s.raw.primal_residual;
  j["dual_residual"] = s.raw.dual_residual;
  j["gap"] = s.raw.gap;
  return j;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_cell(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double v : cells) s.push_back(csv_cell(v));
    row(s);
  }

 private:
  std::ofstream out_;
};

/// Numeric CSV with a header row; the first column may be a date label,
/// which is dropped when `skip_first` is set.
inline Matrix read_price_csv(const std::string& path, bool skip_first = true) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> r;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first && skip_first) {
        first = false;
        continue;
      }
      first = false;
      try {
        r.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DomainError(path + ": non-numeric cell '" + cell + "'");
      }
    }
    if (!rows.empty() && r.size() != rows.front().size()) throw DomainError(path + ": ragged rows");
    rows.push_back(std::move(r));
  }
  require_dims(!rows.empty() && !rows.front().empty(), path + ": no data");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  return m;
}

/// Splits one CSV line; no quoting.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& cell, const std::string& where) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DomainError(where + ": non-numeric cell '" + cell + "'");
  }
}

// ---------------------------------------------------------------------------
// Econometric specs

inline json to_json(const GarchSpec& g) {
  json j{{"rate", g.rate}, {"period", g.period}, {"stocks", json::array()}};
  for (const auto& s : g.stocks)
    j["stocks"].push_back({{"alpha0", s.alpha0}, {"alpha1", s.alpha1}, {"alpha2", s.alpha2},
                           {"alpha3", s.alpha3}, {"kappa", s.kappa}});
  return j;
}

inline GarchSpec garch_from(const json& j) {
  GarchSpec g;
  g.rate = j.value("rate", 0.05);
  g.period = j.value("period", kWeek);
  for (const auto& s : j.at("stocks"))
    g.stocks.push_back({s.at("alpha0").get<double>(), s.at("alpha1").get<double>(), s.at("alpha2").get<double>(),
                        s.at("alpha3").get<double>(), s.value("kappa", 0.0)});
  g.validate();
  return g;
}

inline json to_json(const DccSpec& d) {
  return {{"beta1", d.beta1}, {"beta2", d.beta2}, {"uncond_corr", to_json(d.uncond_corr)},
          {"innovation", d.innovation == DccInnovation::raw ? "raw" : "standardized"}};
}

inline DccSpec dcc_from(const json& j) {
  DccSpec d;
  d.beta1 = j.at("beta1").get<double>();
  d.beta2 = j.at("beta2").get<double>();
  d.uncond_corr = matrix_from(j.at("uncond_corr"));
  const std::string v = j.value("innovation", std::string("raw"));
  if (v == "raw") d.innovation = DccInnovation::raw;
  else if (v == "standardized") d.innovation = DccInnovation::standardized;
  else throw DomainError("json: unknown DCC innovation '" + v + "'");
  d.validate();
  return d;
}

inline json to_json(const MarketState& s) {
  return {{"eps", to_json(s.eps)}, {"var", to_json(s.var)}, {"d", to_json(s.d)}};
}

inline MarketState state_from(const json& j) {
  return {vector_from(j.at("eps")), vector_from(j.at("var")), matrix_from(j.at("d"))};
}

// ---------------------------------------------------------------------------
// Strategies

inline StrategyKind strategy_kind_from(const std::string& s) {
  for (auto k : {StrategyKind::stock, StrategyKind::stock_control, StrategyKind::optioned,
                 StrategyKind::optioned_control, StrategyKind::discretion_stock, StrategyKind::discretion_optioned})
    if (s == to_string(k)) return k;
  throw DomainError("json: unknown strategy '" + s + "'");
}

inline RiskMode risk_mode_from(const std::string& s) {
  if (s == "normal") return RiskMode::normal;
  if (s == "worst-case" || s == "worst_case") return RiskMode::worst_case;
  throw DomainError("unknown risk mode '" + s + "'");
}

inline Strategy default_strategy(StrategyKind k) {
  switch (k) {
    case StrategyKind::stock: return Strategy::stock();
    case StrategyKind::stock_control: return Strategy::stock_control();
    case StrategyKind::optioned: return Strategy::optioned();
    case StrategyKind::optioned_control: return Strategy::optioned_control();
    case StrategyKind::discretion_stock: return Strategy::discretion_stock();
    case StrategyKind::discretion_optioned: return Strategy::discretion_optioned();
  }
  return Strategy::stock();
}

inline json to_json(const StrategyConfig& c) {
  json j{{"use_options", c.use_options}, {"sigma_bar", c.sigma_bar}};
  j["rho_bar"] = c.rho_bar ? json(*c.rho_bar) : json(nullptr);
  return j;
}

inline StrategyConfig strategy_config_from(const json& j, StrategyConfig base) {
  base.use_options = j.value("use_options", base.use_options);
  base.sigma_bar = j.value("sigma_bar", base.sigma_bar);
  if (j.contains("rho_bar")) {
    if (j["rho_bar"].is_null()) base.rho_bar.reset();
    else base.rho_bar = j["rho_bar"].get<double>();
  }
  return base;
}

inline json to_json(const Strategy& s) {
  json j{{"kind", to_string(s.kind)}, {"risk_on", to_json(s.risk_on)},
         {"mode", s.mode == RiskMode::normal ? "normal" : "worst-case"}, {"p", s.p_conf}, {"q", s.q_conf},
         {"n_sia", s.n_sia}, {"position_cap", s.position_cap}, {"option_cap", s.option_cap},
         {"refit_every", s.refit_every}};
  if (s.risk_off) j["risk_off"] = to_json(*s.risk_off);
  return j;
}

/// Starts from the named strategy's defaults; any field present overrides.
/// A top-level "rho_bar" is shorthand for the bound of the constrained
/// configuration.
inline Strategy strategy_from(const json& j) {
  Strategy s = default_strategy(strategy_kind_from(j.at("kind").get<std::string>()));
  if (j.contains("risk_on")) s.risk_on = strategy_config_from(j["risk_on"], s.risk_on);
  if (j.contains("risk_off")) s.risk_off = strategy_config_from(j["risk_off"], s.risk_off.value_or(StrategyConfig{}));
  if (j.contains("rho_bar")) {
    std::optional<double> r;
    if (!j["rho_bar"].is_null()) r = j["rho_bar"].get<double>();
    if (s.kind == StrategyKind::discretion_optioned && s.risk_off) s.risk_off->rho_bar = r;
    else s.risk_on.rho_bar = r;
  }
  if (j.contains("mode")) s.mode = risk_mode_from(j["mode"].get<std::string>());
  s.p_conf = j.value("p", s.p_conf);
  s.q_conf = j.value("q", s.q_conf);
  s.n_sia = j.value("n_sia", s.n_sia);
  s.position_cap = j.value("position_cap", s.position_cap);
  s.option_cap = j.value("option_cap", s.option_cap);
  s.refit_every = j.value("refit_every", s.refit_every);
  s.validate();
  return s;
}

inline json to_json(const PerformanceMetrics& m) {
  json j{{"mean", m.mean}, {"std_dev", m.std_dev}, {"min", m.min}, {"add", m.add}, {"max_drawdown", m.max_drawdown}};
  j["up_ratio"] = m.up_ratio ? json(*m.up_ratio) : json(nullptr);
  j["ds_ratio"] = m.ds_ratio ? json(*m.ds_ratio) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Option series, one row per (series, week) with a quote

inline const std::vector<std::string>& option_series_header() {
  static const std::vector<std::string> h{"series", "underlying", "kind", "style", "strike", "expiry", "listed",
                                          "last_trade", "week", "bid", "ask", "delta", "gamma", "theta"};
  return h;
}

inline void write_option_series_csv(const std::string& path, const std::vector<OptionSeries>& series) {
  CsvWriter w(path, option_series_header());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const OptionSeries& s = series[k];
    for (Index t = 0; t < s.bid.size(); ++t) {
      if (!s.quoted(static_cast<int>(t))) continue;
      w.row({std::to_string(k), std::to_string(s.contract.underlying), kind_name(s.contract.kind),
             style_name(s.contract.style), csv_cell(s.contract.strike), csv_cell(s.contract.expiry),
             std::to_string(s.listed), std::to_string(s.last_trade), std::to_string(t), csv_cell(s.bid(t)),
             csv_cell(s.ask(t)), csv_cell(s.delta(t)), csv_cell(s.gamma(t)), csv_cell(s.theta(t))});
    }
  }
}

/// Reads series written by write_option_series_csv; `weeks` sizes the quote
/// vectors, unquoted weeks stay NaN.
inline std::vector<OptionSeries> read_option_series_csv(const std::string& path, int weeks) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (split_csv(line) != option_series_header()) throw DomainError(path + ": unexpected header");
  std::map<long, OptionSeries> by_id;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (c.size() != option_series_header().size()) throw DomainError(where + ": wrong number of cells");
    const long id = static_cast<long>(parse_cell(c[0], where));
    const int week = static_cast<int>(parse_cell(c[8], where));
    require_dims(week >= 0 && week < weeks, where + ": week outside the price history");
    auto [it, fresh] = by_id.try_emplace(id);
    OptionSeries& s = it->second;
    if (fresh) {
      s.contract.underlying = static_cast<Index>(parse_cell(c[1], where));
      s.contract.kind = kind_from(c[2]);
      s.contract.style = style_from(c[3]);
      s.contract.strike = parse_cell(c[4], where);
      s.contract.expiry = parse_cell(c[5], where);
      s.listed = static_cast<int>(parse_cell(c[6], where));
      s.last_trade = static_cast<int>(parse_cell(c[7], where));
      s.bid = s.ask = s.delta = s.gamma = s.theta = Vector::Constant(weeks, nan);
    }
    s.bid(week) = parse_cell(c[9], where);
    s.ask(week) = parse_cell(c[10], where);
    s.delta(week) = parse_cell(c[11], where);
    s.gamma(week) = parse_cell(c[12], where);
    s.theta(week) = parse_cell(c[13], where);
    require(!(s.ask(week) < s.bid(week)), where + ": ask below bid");
  }
  std::vector<OptionSeries> out;
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  return out;
}

}  // namespace covaropt::io
