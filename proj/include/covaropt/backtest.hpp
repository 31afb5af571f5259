#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/econometrics.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/p1.hpp"
#include "covaropt/risk.hpp"

namespace covaropt {

// ---------------------------------------------------------------------------
// Systemically important assets

/// Average-linkage clusters on the distance 1 - rho, as lists of members.
inline std::vector<IndexSet> correlation_clusters(const Matrix& corr, Index n_cohorts) {
  const Index m = corr.rows();
  require(n_cohorts >= 1 && n_cohorts <= m, "identify_sia: cohort count must lie in [1, m]");
  std::vector<IndexSet> clusters;
  for (Index i = 0; i < m; ++i) clusters.push_back({i});
  auto linkage = [&](const IndexSet& a, const IndexSet& b) {
    double s = 0.0;
    for (Index i : a)
      for (Index j : b) s += 1.0 - corr(i, j);
    return s / static_cast<double>(a.size() * b.size());
  };
  while (static_cast<Index>(clusters.size()) > n_cohorts) {
    std::size_t ba = 0, bb = 1;
    double best = kInf;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = linkage(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return clusters;
}

/// One stock per cohort: the member with the largest sum of correlations
/// with all other stocks, or with the largest prior weight when `weights`
/// is given (correlation sum breaks ties). Sorted ascending.
inline IndexSet identify_sia(const Matrix& corr, Index n_cohorts,
                             const std::optional<Vector>& weights = std::nullopt) {
  const Index m = corr.rows();
  require_dims(corr.cols() == m, "identify_sia: correlation must be square");
  if (weights) require_dims(weights->size() == m, "identify_sia: one weight per stock");
  const Vector score = corr.rowwise().sum() - corr.diagonal();
  IndexSet out;
  for (const auto& cluster : correlation_clusters(corr, n_cohorts)) {
    Index best = cluster.front();
    for (Index i : cluster) {
      const bool better = weights ? ((*weights)(i) > (*weights)(best) ||
                                     ((*weights)(i) == (*weights)(best) && score(i) > score(best)))
                                  : score(i) > score(best);
      if (better) best = i;
    }
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Scenario sweep

struct ScenarioRow {
  double lambda = 0.0;
  Vector dp;      ///< price changes of all stocks
  Vector values;  ///< value change per portfolio
};

/// dp_I = (2 lambda - 1) k with dp_J at its regression fill
/// mu_J + Sigma_JI Sigma_II^{-1} (dp_I - mu_I); options are revalued with
/// the Delta-Gamma expansion.
inline std::vector<ScenarioRow> scenario_sweep(const MarketModel& model, const DistressEvent& event,
                                               const std::vector<GreekSet>& greeks,
                                               const std::vector<Portfolio>& portfolios,
                                               int points = 51) {
  require(points >= 2, "scenario_sweep: need at least 2 points");
  require_dims(event.universe() == model.size(), "scenario_sweep: event/model size mismatch");
  const IndexSet& I = event.distressed();
  const IndexSet& J = event.others();
  const Matrix s_ii = take(model.sigma(), I, I);
  const Matrix s_ji = take(model.sigma(), J, I);
  Eigen::LDLT<Matrix> ldlt(s_ii);
  const Vector mu_i = take(model.mu(), I);
  const Vector mu_j = take(model.mu(), J);
  std::vector<ScenarioRow> out;
  for (int s = 0; s < points; ++s) {
    const double lam = static_cast<double>(s) / (points - 1);
    const Vector dpi = (2.0 * lam - 1.0) * event.losses();
    const Vector dpj = mu_j + s_ji * ldlt.solve(dpi - mu_i);
    ScenarioRow row;
    row.lambda = lam;
    row.dp = Vector::Zero(model.size());
    for (std::size_t a = 0; a < I.size(); ++a) row.dp(I[a]) = dpi(static_cast<Index>(a));
    for (std::size_t a = 0; a < J.size(); ++a) row.dp(J[a]) = dpj(static_cast<Index>(a));
    row.values.resize(static_cast<Index>(portfolios.size()));
    for (std::size_t k = 0; k < portfolios.size(); ++k) {
      const Portfolio& pf = portfolios[k];
      double v = pf.y.dot(row.dp);
      for (Index o = 0; o < pf.x.size(); ++o) {
        const GreekSet& g = greeks[static_cast<std::size_t>(o)];
        v += pf.x(o) * (g.theta * model.dt() + g.delta.dot(row.dp) + 0.5 * row.dp.dot(g.gamma * row.dp));
      }
      row.values(static_cast<Index>(k)) = v;
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Performance metrics

struct PerformanceMetrics {
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double add = 0.0;           ///< average drawdown
  double max_drawdown = 0.0;
  std::optional<double> up_ratio;
  std::optional<double> ds_ratio;
};

/// Drawdown fractions (peak - v_t) / peak of a value path.
inline Vector drawdowns(const Vector& values) {
  Vector dd(values.size());
  double peak = -kInf;
  for (Index t = 0; t < values.size(); ++t) {
    peak = std::max(peak, values(t));
    dd(t) = peak > 0.0 ? (peak - values(t)) / peak : 0.0;
  }
  return dd;
}

/// Metrics of per-period returns against the per-period risk-free rate.
/// The value path starts at 1 and compounds the returns; ADD averages the
/// drawdown over periods 1..T.
inline PerformanceMetrics performance_metrics(const Vector& returns, double rate_per_period) {
  require_dims(returns.size() >= 2, "performance_metrics: need at least two returns");
  const double n = static_cast<double>(returns.size());
  PerformanceMetrics pm;
  pm.mean = returns.mean();
  pm.std_dev = std::sqrt((returns.array() - pm.mean).square().sum() / (n - 1.0));
  pm.min = returns.minCoeff();
  Vector values(returns.size() + 1);
  values(0) = 1.0;
  for (Index t = 0; t < returns.size(); ++t) values(t + 1) = values(t) * (1.0 + returns(t));
  const Vector dd = drawdowns(values);
  pm.add = dd.tail(returns.size()).mean();
  pm.max_drawdown = dd.maxCoeff();

  const Eigen::ArrayXd excess = returns.array() - rate_per_period;
  const double upside = excess.max(0.0).mean();
  const double downside = std::sqrt(excess.min(0.0).square().mean());
  if (downside > 0.0) pm.up_ratio = upside / downside;
  const double semivar = (returns.array() - pm.mean).min(0.0).square().mean();
  if (semivar > 0.0) pm.ds_ratio = (pm.mean - rate_per_period) / std::sqrt(2.0 * semivar);
  return pm;
}

// ---------------------------------------------------------------------------
// Strategies and data

enum class StrategyKind { stock, stock_control, optioned, optioned_control, discretion_stock, discretion_optioned };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::stock: return "stock";
    case StrategyKind::stock_control: return "stock_control";
    case StrategyKind::optioned: return "optioned";
    case StrategyKind::optioned_control: return "optioned_control";
    case StrategyKind::discretion_stock: return "discretion_stock";
    case StrategyKind::discretion_optioned: return "discretion_optioned";
  }
  return "unknown";
}

/// One optimization configuration; `rho_bar` empty means no CoVaR
/// constraint. Bounds are fractions of current wealth.
struct StrategyConfig {
  bool use_options = false;
  std::optional<double> rho_bar;
  double sigma_bar = 0.1;
};

inline constexpr double kHighRhoBar = 0.05;
inline constexpr double kLowRhoBar = 0.001;

struct Strategy {
  StrategyKind kind = StrategyKind::stock;
  StrategyConfig risk_on;
  std::optional<StrategyConfig> risk_off;
  RiskMode mode = RiskMode::normal;
  double p_conf = 0.95;
  double q_conf = 0.95;
  Index n_sia = 5;
  double position_cap = 0.1;  ///< u bound per position, fraction of wealth
  double option_cap = 0.3;    ///< total option notional, fraction of wealth
  int refit_every = 13;       ///< weeks between GJR refits (discretion only)

  static Strategy stock() { return {StrategyKind::stock, {false, std::nullopt, 0.1}, std::nullopt}; }
  static Strategy stock_control(double rho = kLowRhoBar) {
    return {StrategyKind::stock_control, {false, rho, 0.1}, std::nullopt};
  }
  static Strategy optioned() { return {StrategyKind::optioned, {true, std::nullopt, 0.1}, std::nullopt}; }
  static Strategy optioned_control(double rho = kLowRhoBar) {
    return {StrategyKind::optioned_control, {true, rho, 0.1}, std::nullopt};
  }
  static Strategy discretion_stock() {
    return {StrategyKind::discretion_stock, {false, std::nullopt, 0.1},
            StrategyConfig{false, std::nullopt, 0.02}};
  }
  static Strategy discretion_optioned(double rho = kLowRhoBar) {
    return {StrategyKind::discretion_optioned, {true, std::nullopt, 0.1},
            StrategyConfig{true, rho, 0.1}};
  }

  bool is_discretion() const {
    return kind == StrategyKind::discretion_stock || kind == StrategyKind::discretion_optioned;
  }
  void validate() const {
    const bool control = kind == StrategyKind::stock_control || kind == StrategyKind::optioned_control;
    if (control) require(risk_on.rho_bar.has_value() && n_sia >= 1, "Strategy: control needs a CoVaR bound");
    if (is_discretion()) require(risk_off.has_value(), "Strategy: discretion needs a risk-off configuration");
    require(position_cap > 0.0 && option_cap >= 0.0, "Strategy: caps must be nonnegative");
  }
};

/// One listed option with weekly quotes and sensitivities; NaN marks weeks
/// without a quote. Tradable in weeks [listed, last_trade].
struct OptionSeries {
  OptionContract contract;
  int listed = 0;
  int last_trade = 0;
  Vector bid, ask;
  Vector delta, gamma, theta;

  bool quoted(int t) const { return t < bid.size() && std::isfinite(bid(t)) && std::isfinite(ask(t)); }
  bool tradable(int t) const { return t >= listed && t <= last_trade && quoted(t) && quoted(t + 1); }
};

struct BacktestFeed {
  Matrix prices;  ///< weeks x stocks, history first
  int start = 0;  ///< first trading week
  double rate = 0.05;
  std::vector<OptionSeries> options;

  int weeks() const { return static_cast<int>(prices.rows()); }
  Index stocks() const { return prices.cols(); }
};

struct WeekRecord {
  int week = 0;
  double value = 0.0;  ///< v_t before trading
  Vector y;
  std::vector<std::pair<std::size_t, double>> x;  ///< (series index, contracts)
  double cash = 0.0;   ///< k_t
  bool solved = true;
  bool risk_off = false;
  IndexSet sia;
};

struct BacktestReport {
  std::string strategy;
  Vector values;   ///< v_0 = 1, ..., v_T
  Vector returns;  ///< v_{t+1} / v_t - 1
  PerformanceMetrics metrics;
  std::vector<WeekRecord> weeks;
  std::vector<std::string> log;
};

namespace detail {

// Value of option holdings at week t: ask for long, bid for short.
inline double option_value(const BacktestFeed& feed, const std::vector<std::pair<std::size_t, double>>& x,
                           int t, bool costs) {
  double v = 0.0;
  for (const auto& [k, amt] : x) {
    const OptionSeries& s = feed.options[k];
    const double mid = 0.5 * (s.bid(t) + s.ask(t));
    const double buy = costs ? s.ask(t) : mid;
    const double sell = costs ? s.bid(t) : mid;
    v += amt > 0.0 ? buy * amt : sell * amt;
  }
  return v;
}

}  // namespace detail

/// Marks holdings chosen at week t to market at week t+1.
inline double next_value(const BacktestFeed& feed, const WeekRecord& w, bool costs) {
  const int t = w.week;
  const double dt = kWeek;
  return detail::option_value(feed, w.x, t + 1, costs) + feed.prices.row(t + 1).dot(w.y) +
         w.cash * (1.0 + feed.rate * dt);
}

/// Weekly rebalancing loop. Each week the model is estimated from all
/// prices up to that week, the SIA set is identified, and (P1) is solved
/// from scratch with the current wealth as the budget. An unsolved week
/// keeps the previous holdings.
inline BacktestReport run_backtest(const Strategy& strategy, const BacktestFeed& feed, bool costs) {
  strategy.validate();
  const int weeks = feed.weeks();
  const Index m = feed.stocks();
  require(feed.start >= 3 && feed.start < weeks - 1, "run_backtest: need history before the start week");
  require(strategy.n_sia <= m, "run_backtest: more SIAs than stocks");

  BacktestReport rep;
  rep.strategy = to_string(strategy.kind);
  const int horizon = weeks - 1 - feed.start;
  rep.values.resize(horizon + 1);
  rep.values(0) = 1.0;

  GarchSpec garch;
  int last_fit = -1000000;
  double v = 1.0;
  WeekRecord prev;
  bool have_prev = false;
  for (int t = feed.start; t < weeks - 1; ++t) {
    WeekRecord w;
    w.week = t;
    w.value = v;
    const MarketModel model = estimate_from_prices(feed.prices.topRows(t + 1), kWeek, kWeek);

    StrategyConfig cfg = strategy.risk_on;
    if (strategy.is_discretion()) {
      const Matrix logret = (feed.prices.block(1, 0, t, m).array() /
                             feed.prices.block(0, 0, t, m).array()).log().matrix();
      if (logret.rows() >= 200) {
        if (t - last_fit >= strategy.refit_every) {
          garch.stocks.clear();
          garch.rate = feed.rate;
          for (Index i = 0; i < m; ++i) garch.stocks.push_back(fit_gjr(logret.col(i), feed.rate).params);
          last_fit = t;
        }
        MarketState state;
        state.eps.resize(m);
        state.var.resize(m);
        for (Index i = 0; i < m; ++i) {
          Vector var, eps;
          detail::gjr_loglik(garch.stocks[static_cast<std::size_t>(i)], logret.col(i), feed.rate * kWeek,
                             &var, &eps);
          state.eps(i) = eps(eps.size() - 1);
          state.var(i) = var(var.size() - 1);
        }
        w.risk_off = discretion_signal(garch, state, state.var);
      } else {
        rep.log.push_back("week " + std::to_string(t) + ": history too short for GJR, risk-on");
      }
      if (w.risk_off) cfg = *strategy.risk_off;
    }

    std::vector<std::size_t> series;
    if (cfg.use_options)
      for (std::size_t k = 0; k < feed.options.size(); ++k)
        if (feed.options[k].tradable(t)) series.push_back(k);

    P1Problem prob{model, {}, Vector(static_cast<Index>(series.size())),
                   Vector(static_cast<Index>(series.size())), {}, Vector(), cfg.sigma_bar,
                   strategy.q_conf, strategy.mode,
                   Admissible::fresh(static_cast<Index>(series.size()), m, v, strategy.position_cap * v,
                                     strategy.position_cap * v),
                   std::nullopt};
    for (std::size_t a = 0; a < series.size(); ++a) {
      const OptionSeries& s = feed.options[series[a]];
      prob.greeks.push_back(GreekSet::single(m, s.contract.underlying, s.delta(t), s.gamma(t), s.theta(t)));
      const double mid = 0.5 * (s.bid(t) + s.ask(t));
      prob.bid(static_cast<Index>(a)) = costs ? s.bid(t) : mid;
      prob.ask(static_cast<Index>(a)) = costs ? s.ask(t) : mid;
    }
    if (!series.empty()) prob.omega.option_cap = strategy.option_cap * v;
    if (cfg.rho_bar) {
      w.sia = identify_sia(model.correlation(), strategy.n_sia);
      prob.events.push_back(DistressEvent::at_var(model, w.sia, strategy.p_conf));
      prob.rho_bar = Vector::Constant(1, *cfg.rho_bar);
    }

    P1Solution sol;
    try {
      sol = solve_p1(prob);
    } catch (const std::exception& e) {
      rep.log.push_back("week " + std::to_string(t) + ": " + e.what());
      sol.status = SolveStatus::max_iter;
    }
    if (sol.optimal()) {
      w.y = sol.y;
      for (std::size_t a = 0; a < series.size(); ++a) {
        const double amt = sol.x(static_cast<Index>(a));
        if (amt != 0.0) w.x.emplace_back(series[a], amt);
      }
    } else {
      w.solved = false;
      rep.log.push_back("week " + std::to_string(t) + ": solve " + to_string(sol.status) +
                        ", holding previous portfolio");
      w.y = have_prev ? prev.y : Vector::Zero(m);
      if (have_prev)
        for (const auto& h : prev.x)
          if (feed.options[h.first].quoted(t) && feed.options[h.first].quoted(t + 1)) w.x.push_back(h);
    }
    w.cash = v - detail::option_value(feed, w.x, t, costs) - feed.prices.row(t).dot(w.y);
    v = next_value(feed, w, costs);
    rep.values(t - feed.start + 1) = v;
    rep.weeks.push_back(w);
    prev = w;
    have_prev = true;
  }
  rep.returns = rep.values.tail(horizon).cwiseQuotient(rep.values.head(horizon)).array() - 1.0;
  if (horizon >= 2) rep.metrics = performance_metrics(rep.returns, feed.rate * kWeek);
  return rep;
}

// ---------------------------------------------------------------------------
// Simulated feeds

struct FeedConfig {
  Index stocks = 6;
  int history = 260;     ///< weeks before trading starts
  int horizon = 52;      ///< trading weeks
  double rate = 0.05;
  double spread = 0.0;   ///< option bid-ask spread as a fraction of mid
  int crash_weeks = 0;   ///< consecutive crash weeks starting at the first trading week
  double crash_shock = -1.0;  ///< shift of the standardized shock during crash weeks
  double expiry = 1.5;   ///< option life in years
  int roll_weeks = 52;   ///< option series are replaced after this many weeks
};

/// A GJR-DCC physical path with an optional injected crash, plus four
/// option series per stock (ATM call/put, 20% OTM call/put) listed at the
/// start and re-listed every `roll_weeks`. Quotes are Black-Scholes at the
/// annualized one-step GJR variance forecast.
inline BacktestFeed simulate_feed(const GarchSpec& spec, const DccSpec& dcc, const FeedConfig& cfg,
                                  std::uint64_t seed) {
  spec.validate();
  dcc.validate();
  const Index m = spec.size();
  require_dims(m == cfg.stocks && dcc.size() == m, "simulate_feed: stock count mismatch");
  const int weeks = cfg.history + cfg.horizon + 1;
  const double rpp = cfg.rate * spec.period;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MarketState st = stationary_state(spec, dcc);
  Matrix prices(weeks, m);
  Matrix fvar(weeks, m);
  prices.row(0).setOnes();
  Vector var = st.var, eps = st.eps;
  Matrix d = st.d;
  Vector z(m);
  for (int t = 0; t < weeks; ++t) {
    // Variance of the move from t to t+1.
    Vector innov(m);
    for (Index i = 0; i < m; ++i) {
      innov(i) = dcc.innovation == DccInnovation::raw ? eps(i) : eps(i) / std::sqrt(var(i));
      var(i) = spec.stocks[static_cast<std::size_t>(i)].next_variance(eps(i), var(i));
      fvar(t, i) = var(i);
    }
    if (t == weeks - 1) break;
    d = dcc.next_d(d, innov);
    Eigen::LLT<Matrix> llt(dcc_normalize(d));
    for (Index i = 0; i < m; ++i) z(i) = gauss(rng);
    Vector w = llt.matrixL() * z;
    if (t >= cfg.history && t < cfg.history + cfg.crash_weeks) w.array() += cfg.crash_shock;
    for (Index i = 0; i < m; ++i) {
      const double sd = std::sqrt(var(i));
      eps(i) = sd * w(i);
      const double r = rpp + spec.stocks[static_cast<std::size_t>(i)].kappa * sd - 0.5 * var(i) + eps(i);
      prices(t + 1, i) = prices(t, i) * std::exp(r);
    }
  }

  BacktestFeed feed;
  feed.prices = prices;
  feed.start = cfg.history;
  feed.rate = cfg.rate;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int listed = cfg.history; listed < weeks - 1; listed += cfg.roll_weeks) {
    const int expiry_week = listed + static_cast<int>(std::lround(cfg.expiry / spec.period));
    for (Index i = 0; i < m; ++i) {
      const double spot0 = prices(listed, i);
      const std::pair<OptionKind, double> kinds[] = {
          {OptionKind::call, 1.0}, {OptionKind::put, 1.0}, {OptionKind::call, 1.2}, {OptionKind::put, 0.8}};
      for (const auto& [kind, money] : kinds) {
        OptionSeries s;
        s.contract.underlying = i;
        s.contract.kind = kind;
        s.contract.style = ExerciseStyle::european;
        s.contract.strike = money * spot0;
        s.contract.expiry = cfg.expiry;
        s.listed = listed;
        s.last_trade = listed + cfg.roll_weeks - 1;
        s.bid = s.ask = s.delta = s.gamma = s.theta = Vector::Constant(weeks, nan);
        for (int t = listed; t < std::min(weeks, expiry_week); ++t) {
          const double tau = (expiry_week - t) * spec.period;
          const double vol = std::sqrt(fvar(t, i) / spec.period);
          const ScalarGreeks g = bs_price_and_greeks(prices(t, i), s.contract.strike, vol, cfg.rate, tau, kind);
          s.bid(t) = g.price * (1.0 - 0.5 * cfg.spread);
          s.ask(t) = g.price * (1.0 + 0.5 * cfg.spread);
          s.delta(t) = g.delta;
          s.gamma(t) = g.gamma;
          s.theta(t) = g.theta;
        }
        feed.options.push_back(std::move(s));
      }
    }
  }
  return feed;
}

}  // namespace covaropt
