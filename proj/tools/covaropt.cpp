#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covaropt/covaropt.hpp"
#include "covaropt/io.hpp"

namespace fs = std::filesystem;
using namespace covaropt;
using io::json;

namespace {

struct FeedOptions {
  Index stocks = 6;
  int history = 260;
  double spread = 0.02;
  int crash_weeks = 0;
  double crash_shock = -1.0;
};

// Solver trouble that should surface as exit code 2.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double p = 0.95;
  double q = 0.95;
  double rate = 0.05;
  std::optional<double> rho_bar;
  std::optional<double> sigma_bar;
  std::string risk_mode = "normal";
  std::uint64_t seed = 1;
  std::string out = ".";

  RiskMode mode() const { return io::risk_mode_from(risk_mode); }
  std::string path(const std::string& name) const {
    fs::create_directories(out);
    return (fs::path(out) / name).string();
  }
  void validate() const {
    require(p >= 0.5 && p < 1.0, "--p must lie in [0.5,1)");
    require(q >= 0.5 && q < 1.0, "--q must lie in [0.5,1)");
    mode();
  }
};

io::ProblemDocument load_document(const std::string& path, const RunConfig& cfg) {
  io::ProblemDocument doc = io::document_from(io::read_json(path));
  if (cfg.rho_bar) doc.limits.rho_bar = {*cfg.rho_bar};
  if (cfg.sigma_bar) doc.limits.sigma_bar = *cfg.sigma_bar;
  return doc;
}

void check_solution(const P1Solution& s, const std::string& what) {
  if (s.status == SolveStatus::max_iter) throw SolverFailure(what + ": solver did not converge");
}

void emit(const json& j, const std::string& file) {
  io::write_json(file, j);
  std::cout << j.dump(2) << '\n';
}

Vector annual_vols(const io::ProblemDocument& doc) {
  if (doc.annual_vol) return *doc.annual_vol;
  const MarketModel& m = doc.model;
  Vector v(m.size());
  for (Index i = 0; i < m.size(); ++i) v(i) = m.sd(i) / m.prices()(i) / std::sqrt(m.dt());
  return v;
}

// ---------------------------------------------------------------------------

int cmd_gen_instance(const RunConfig& cfg, Index stocks, Index options, bool per_stock, Index sia, double u_stock,
                     double u_option, std::optional<double> option_cap, double spread) {
  Instance inst = generate_instance(stocks, options, cfg.seed, kWeek, cfg.rate, per_stock);
  for (auto& o : inst.options) {
    const double mid = o.mid();
    o.bid = mid * (1.0 - 0.5 * spread);
    o.ask = mid * (1.0 + 0.5 * spread);
  }
  io::ProblemDocument doc = io::document_from(inst);
  if (sia > 0) doc.events.push_back({identify_sia(inst.correlation, std::min(sia, stocks)), std::nullopt});
  doc.limits.u_stock = u_stock;
  doc.limits.u_option = u_option;
  doc.limits.option_cap = option_cap;
  if (cfg.rho_bar) doc.limits.rho_bar = {*cfg.rho_bar};
  if (cfg.sigma_bar) doc.limits.sigma_bar = *cfg.sigma_bar;
  const std::string file = cfg.path("instance.json");
  io::write_json(file, io::to_json(doc));
  std::cout << file << '\n';
  return 0;
}

int cmd_covar(const RunConfig& cfg, const std::string& doc_path, int paths) {
  const io::ProblemDocument doc = load_document(doc_path, cfg);
  require(doc.portfolio.has_value(), "covar: document has no portfolio");
  require(!doc.events.empty(), "covar: document has no distress events");
  const auto greeks = doc.greek_sets();
  const Portfolio& pf = *doc.portfolio;
  json out = json::array();
  for (std::size_t e = 0; e < doc.events.size(); ++e) {
    const DistressEvent ev = doc.events[e].resolve(doc.model, cfg.p);
    const ConditionalMoments cm = conditional_moments(doc.model, ev, greeks, pf);
    json j{{"event", e}, {"mean", cm.mean}, {"variance", cm.variance},
           {"covar_normal", covar_normal_approx(cm, cfg.q)}, {"covar_worst_case", covar_worst_case(cm, cfg.q)}};
    if (pf.stock_only()) j["covar_exact"] = stock_covar(doc.model, ev, pf.y, cfg.q);
    if (paths > 0) {
      const QuantileEstimate mc =
          covar_mc_oracle(spectral_reform(doc.model, ev, greeks, pf), cfg.q, paths, mix_seed(cfg.seed, e));
      j["covar_mc"] = mc.value;
      j["covar_mc_se"] = mc.std_error;
    } else {
      j["covar_mc"] = nullptr;
    }
    out.push_back(j);
  }
  emit(out, cfg.path("covar.json"));
  return 0;
}

P1Objective objective_from(const std::string& s) {
  if (s == "max-return") return P1Objective::max_return;
  if (s == "min-covar") return P1Objective::min_covar;
  if (s == "min-std") return P1Objective::min_std;
  throw DomainError("unknown objective '" + s + "'");
}

int cmd_optimize(const RunConfig& cfg, const std::string& doc_path, const std::string& objective) {
  const io::ProblemDocument doc = load_document(doc_path, cfg);
  const P1Builder builder(io::to_p1(doc, cfg.p, cfg.q, cfg.mode()));
  const P1Solution sol = builder.solve_variant(objective_from(objective));
  check_solution(sol, "optimize");
  json j = io::to_json(sol);
  j["objective"] = objective;
  emit(j, cfg.path("solution.json"));
  return 0;
}

int cmd_frontier(const RunConfig& cfg, const std::string& doc_path, int grid) {
  const io::ProblemDocument doc = load_document(doc_path, cfg);
  require(!doc.events.empty(), "frontier: document has no distress events");
  const P1Builder builder(io::to_p1(doc, cfg.p, cfg.q, cfg.mode()));
  const auto cells = frontier(builder, grid);
  const std::string file = cfg.path("frontier.csv");
  io::CsvWriter w(file, {"rho_bar", "sigma_bar", "expected_return", "status"});
  int solved = 0;
  for (const auto& c : cells) {
    w.row({io::csv_cell(c.rho_bar), io::csv_cell(c.sigma_bar), io::csv_cell(c.expected_return), to_string(c.status)});
    solved += c.status == SolveStatus::optimal;
  }
  std::cout << file << ": " << cells.size() << " cells, " << solved << " optimal\n";
  return 0;
}

int cmd_feasibility(const RunConfig& cfg, const std::string& doc_path) {
  const io::ProblemDocument doc = load_document(doc_path, cfg);
  require(!doc.events.empty(), "feasibility: document has no distress events");
  const P1Problem prob = io::to_p1(doc, cfg.p, cfg.q, cfg.mode());
  json out = json::array();
  for (std::size_t e = 0; e < prob.events.size(); ++e) {
    const auto rep = controllability_bounds(doc.model, prob.events[e], cfg.q);
    const double rho = prob.rho_bar(static_cast<Index>(e));
    out.push_back({{"event", e}, {"distressed", prob.events[e].distressed()}, {"bound_i", rep.bound_i},
                   {"bound_j", io::bound_to_json(rep.bound_j)}, {"min_covar", rep.min_covar()},
                   {"rho_bar", io::bound_to_json(rho)}, {"infeasible", rep.infeasible(rho)},
                   {"witness", rep.witness.size() ? io::to_json(rep.witness) : json::array()}});
  }
  emit(out, cfg.path("feasibility.json"));
  return 0;
}

int cmd_seesaw(const RunConfig& cfg, const std::string& doc_path, double vol1, double vol2, double mu1, double mu2,
               double rho, int points) {
  std::optional<MarketModel> model;
  if (!doc_path.empty()) {
    model = load_document(doc_path, cfg).model;
  } else {
    require(std::abs(rho) < 1.0, "seesaw: |rho| must be < 1");
    Matrix cov(2, 2);
    cov << vol1 * vol1, rho * vol1 * vol2, rho * vol1 * vol2, vol2 * vol2;
    Vector mu(2);
    mu << mu1, mu2;
    model.emplace(Vector::Ones(2), mu * kWeek, cov * kWeek, kWeek);
  }
  const SeesawCoefficients sc = seesaw_coefficients(*model, cfg.p, cfg.q);
  const Vector& p = model->prices();
  const auto law1 = conditional_law(*model, DistressEvent::at_var(*model, {0}, cfg.p));
  const auto law2 = conditional_law(*model, DistressEvent::at_var(*model, {1}, cfg.p));
  const std::string file = cfg.path("seesaw.csv");
  io::CsvWriter w(file, {"w", "covar_event1", "covar_event2"});
  for (double wt : linspace(0.0, 1.0, points)) {
    Vector y(2);
    y << wt / p(0), (1.0 - wt) / p(1);
    w.row(std::vector<double>{wt, stock_covar(law1, y, cfg.q), stock_covar(law2, y, cfg.q)});
  }
  std::cout << json{{"slope1", sc.slope1}, {"slope2", sc.slope2}, {"seesaw", sc.seesaw}, {"csv", file}}.dump(2)
            << '\n';
  return 0;
}

int cmd_contagion(const RunConfig& cfg, double sigma, int points, std::optional<double> loss_max) {
  const double hi = loss_max.value_or(3.0 * std::sqrt(sigma));
  const auto grid = contagion_surface(linspace(-1.0, 1.0, points), linspace(0.0, hi, points), cfg.q, sigma);
  const std::string file = cfg.path("contagion.csv");
  io::CsvWriter w(file, {"rho", "loss", "covar"});
  for (const auto& g : grid) w.row(std::vector<double>{g.rho, g.loss, g.covar});
  std::cout << file << ": " << grid.size() << " points\n";
  return 0;
}

int cmd_scenario(const RunConfig& cfg, const std::string& doc_path, std::size_t event, int points) {
  const io::ProblemDocument doc = load_document(doc_path, cfg);
  require(event < doc.events.size(), "scenario: event index out of range");
  const auto greeks = doc.greek_sets();
  const Index n = static_cast<Index>(doc.options.size());
  std::vector<std::string> names;
  std::vector<Portfolio> pfs;
  if (doc.portfolio) {
    names.push_back("portfolio");
    pfs.push_back(*doc.portfolio);
  } else {
    // Compare the optimal stock-only book with the optioned one.
    io::ProblemDocument stock_doc = doc;
    stock_doc.limits.u_option = 0.0;
    stock_doc.limits.option_cap.reset();
    for (const auto& [name, d] : {std::pair<const char*, const io::ProblemDocument*>{"stock", &stock_doc},
                                  std::pair<const char*, const io::ProblemDocument*>{"optioned", &doc}}) {
      if (d == &doc && n == 0) break;
      const P1Solution s = P1Builder(io::to_p1(*d, cfg.p, cfg.q, cfg.mode())).solve_variant(P1Objective::max_return);
      check_solution(s, std::string("scenario (") + name + ")");
      if (!s.optimal()) throw DomainError(std::string("scenario: ") + name + " problem is " + to_string(s.status));
      names.push_back(name);
      pfs.push_back({s.y, s.x});
    }
  }
  const DistressEvent ev = doc.events[event].resolve(doc.model, cfg.p);
  const auto rows = scenario_sweep(doc.model, ev, greeks, pfs, points);
  std::vector<std::string> header{"lambda"};
  for (Index i = 0; i < doc.model.size(); ++i) header.push_back("dp_" + std::to_string(i));
  for (const auto& nm : names) header.push_back("value_" + nm);
  const std::string file = cfg.path("scenario.csv");
  io::CsvWriter w(file, header);
  for (const auto& r : rows) {
    std::vector<double> cells{r.lambda};
    for (Index i = 0; i < r.dp.size(); ++i) cells.push_back(r.dp(i));
    for (Index k = 0; k < r.values.size(); ++k) cells.push_back(r.values(k));
    w.row(cells);
  }
  std::cout << file << ": " << rows.size() << " rows\n";
  return 0;
}

// Default market for simulated feeds: identical GJR marginals, equicorrelated.
std::pair<GarchSpec, DccSpec> default_market(Index stocks, double rate) {
  GarchSpec g;
  g.rate = rate;
  g.stocks.assign(static_cast<std::size_t>(stocks), GjrGarch{4e-5, 0.05, 0.10, 0.85, 0.05});
  DccSpec d;
  d.beta1 = 0.05;
  d.beta2 = 0.90;
  d.uncond_corr = Matrix::Constant(stocks, stocks, 0.3);
  d.uncond_corr.diagonal().setOnes();
  return {g, d};
}

struct MarketFile {
  GarchSpec garch;
  DccSpec dcc;
  std::optional<MarketState> state;
};

MarketFile load_market(const std::string& path) {
  const json j = io::read_json(path);
  MarketFile f{io::garch_from(j.at("garch")), io::dcc_from(j.at("dcc")), std::nullopt};
  require_dims(f.dcc.size() == f.garch.size(), path + ": garch and dcc sizes differ");
  if (j.contains("state")) f.state = io::state_from(j["state"]);
  return f;
}

int cmd_estimate_garch(const RunConfig& cfg, const std::string& returns_path, const std::string& prices_path,
                       const std::string& innovation) {
  require(returns_path.empty() != prices_path.empty(), "estimate-garch: give exactly one of --returns or --prices");
  Matrix ret;
  if (!returns_path.empty()) {
    ret = io::read_price_csv(returns_path);
  } else {
    const Matrix px = io::read_price_csv(prices_path);
    require_dims(px.rows() >= 2, "estimate-garch: need at least two price rows");
    require((px.array() > 0.0).all(), "estimate-garch: prices must be positive");
    ret = (px.bottomRows(px.rows() - 1).array() / px.topRows(px.rows() - 1).array()).log().matrix();
  }
  const Index m = ret.cols();
  const Index t_len = ret.rows();
  GarchSpec spec;
  spec.rate = cfg.rate;
  std::vector<GjrFit> fits(static_cast<std::size_t>(m));
  parallel_for(fits.size(), [&](std::size_t i) { fits[i] = fit_gjr(ret.col(static_cast<Index>(i)), cfg.rate); });
  Matrix z(t_len, m), scale(t_len, m), eps(t_len, m);
  json per_stock = json::array();
  for (Index i = 0; i < m; ++i) {
    const GjrFit& f = fits[static_cast<std::size_t>(i)];
    spec.stocks.push_back(f.params);
    eps.col(i) = f.residuals;
    scale.col(i) = f.variances.cwiseSqrt();
    z.col(i) = f.residuals.cwiseQuotient(scale.col(i));
    per_stock.push_back({{"loglik", f.loglik}, {"converged", f.converged}, {"std_errors", io::to_json(f.std_errors)},
                         {"message", f.message}});
  }
  require(innovation == "raw" || innovation == "standardized", "unknown --dcc '" + innovation + "'");
  const DccInnovation variant = innovation == "raw" ? DccInnovation::raw : DccInnovation::standardized;
  const DccFit dfit = fit_dcc(z, variant, &scale);
  const Matrix& innov = variant == DccInnovation::raw ? eps : z;
  Matrix d = dfit.spec.uncond_corr;
  for (Index t = 0; t + 1 < t_len; ++t) d = dfit.spec.next_d(d, innov.row(t).transpose());
  const MarketState state{eps.row(t_len - 1).transpose(),
                          scale.row(t_len - 1).transpose().cwiseAbs2(), d};
  json j{{"garch", io::to_json(spec)},
         {"dcc", io::to_json(dfit.spec)},
         {"state", io::to_json(state)},
         {"diagnostics",
          {{"stocks", per_stock},
           {"dcc", {{"loglik", dfit.loglik}, {"converged", dfit.converged}, {"std_errors", io::to_json(dfit.std_errors)}}}}}};
  emit(j, cfg.path("garch.json"));
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& market_path, bool feed, int horizon, int paths,
                 const std::string& measure, const FeedOptions& fo) {
  MarketFile mk;
  if (!market_path.empty()) {
    mk = load_market(market_path);
  } else {
    auto [g, d] = default_market(fo.stocks, cfg.rate);
    mk = {g, d, std::nullopt};
  }
  mk.garch.rate = cfg.rate;
  if (feed) {
    FeedConfig fc;
    fc.stocks = mk.garch.size();
    fc.history = fo.history;
    fc.horizon = horizon;
    fc.rate = cfg.rate;
    fc.spread = fo.spread;
    fc.crash_weeks = fo.crash_weeks;
    fc.crash_shock = fo.crash_shock;
    const BacktestFeed f = simulate_feed(mk.garch, mk.dcc, fc, cfg.seed);
    const std::string prices = cfg.path("prices.csv");
    {
      std::vector<std::string> header{"week"};
      for (Index i = 0; i < f.stocks(); ++i) header.push_back("stock_" + std::to_string(i));
      io::CsvWriter w(prices, header);
      for (int t = 0; t < f.weeks(); ++t) {
        std::vector<double> row{static_cast<double>(t)};
        for (Index i = 0; i < f.stocks(); ++i) row.push_back(f.prices(t, i));
        w.row(row);
      }
    }
    const std::string options = cfg.path("options.csv");
    io::write_option_series_csv(options, f.options);
    std::cout << json{{"prices", prices}, {"options", options}, {"start", f.start}, {"weeks", f.weeks()}}.dump(2)
              << '\n';
    return 0;
  }
  Measure ms;
  if (measure == "physical") ms = Measure::physical;
  else if (measure == "risk-neutral") ms = Measure::risk_neutral;
  else throw DomainError("unknown --measure '" + measure + "'");
  const MarketState st = mk.state.value_or(stationary_state(mk.garch, mk.dcc));
  const auto sims = simulate_paths(mk.garch, mk.dcc, st, horizon, paths, cfg.seed, ms);
  const std::string file = cfg.path("paths.csv");
  io::CsvWriter w(file, {"path", "week", "stock", "log_return", "variance"});
  for (std::size_t p = 0; p < sims.size(); ++p)
    for (Index t = 0; t < sims[p].log_returns.rows(); ++t)
      for (Index i = 0; i < sims[p].log_returns.cols(); ++i)
        w.row(std::vector<double>{static_cast<double>(p), static_cast<double>(t + 1), static_cast<double>(i),
                                  sims[p].log_returns(t, i), sims[p].variances(t, i)});
  std::cout << file << ": " << sims.size() << " paths x " << horizon << " weeks\n";
  return 0;
}

int cmd_price_options(const RunConfig& cfg, const std::string& doc_path, const std::string& pricer, int paths,
                      int steps, const std::string& market_path, double min_bid) {
  io::ProblemDocument doc = load_document(doc_path, cfg);
  const Vector vols = annual_vols(doc);
  std::optional<MarketFile> mk;
  if (pricer == "garch-mc") {
    require(!market_path.empty(), "price-options: garch-mc needs --garch");
    mk = load_market(market_path);
    require_dims(mk->garch.size() == doc.model.size(), "price-options: garch spec size differs from the model");
  } else if (pricer != "bs" && pricer != "lsmc") {
    throw DomainError("unknown --pricer '" + pricer + "'");
  }

  io::ProblemDocument out = doc;
  out.options.clear();
  out.greeks.clear();
  std::vector<Index> kept;
  json warnings = json::array();
  for (std::size_t k = 0; k < doc.options.size(); ++k) {
    const OptionContract& c = doc.options[k];
    if (c.bid < min_bid) continue;
    const Index u = c.underlying;
    const double spot = doc.model.prices()(u);
    const std::uint64_t seed = mix_seed(cfg.seed, k);
    ScalarGreeks g;
    if (pricer == "bs") {
      if (c.style == ExerciseStyle::american)
        warnings.push_back("option " + std::to_string(k) + ": american contract priced as european");
      g = bs_price_and_greeks(spot, c.strike, vols(u), doc.rate, c.expiry, c.kind);
    } else if (pricer == "lsmc") {
      const GbmDynamics dyn{vols(u), doc.rate};
      g = finite_diff_greeks(
          [&](double s, double tau) {
            OptionContract ct = c;
            ct.expiry = tau;
            return lsmc_american(paths, steps, dyn, ct, s, seed).price;
          },
          spot, c.expiry);
    } else {
      const GjrGarch& gj = mk->garch.stocks[static_cast<std::size_t>(u)];
      const double var = mk->state ? mk->state->var(u) : gj.unconditional_variance();
      const double eps = mk->state ? mk->state->eps(u) : 0.0;
      g = finite_diff_greeks(
          [&](double s, double tau) {
            OptionContract ct = c;
            ct.expiry = tau;
            return garch_mc_price(ct, gj, doc.rate, s, var, eps, paths, seed, mk->garch.period).price;
          },
          spot, c.expiry);
    }
    out.options.push_back(c);
    out.greeks.push_back(g);
    kept.push_back(static_cast<Index>(k));
  }
  if (doc.portfolio && kept.size() != doc.options.size()) {
    Vector x(static_cast<Index>(kept.size()));
    for (std::size_t a = 0; a < kept.size(); ++a) x(static_cast<Index>(a)) = doc.portfolio->x(kept[a]);
    out.portfolio->x = x;
  }
  if (out.limits.x0.size() && kept.size() != doc.options.size()) {
    Vector x0(static_cast<Index>(kept.size()));
    for (std::size_t a = 0; a < kept.size(); ++a) x0(static_cast<Index>(a)) = doc.limits.x0(kept[a]);
    out.limits.x0 = x0;
  }
  const std::string file = cfg.path("priced.json");
  io::write_json(file, io::to_json(out));
  std::cout << json{{"document", file}, {"priced", kept.size()}, {"dropped", doc.options.size() - kept.size()},
                    {"warnings", warnings}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_backtest(const RunConfig& cfg, const std::string& prices_path, const std::string& options_path,
                 const std::string& strategy_path, const std::string& kind, std::optional<Index> n_sia, int start,
                 bool no_costs, int bins) {
  Strategy strat = !strategy_path.empty() ? io::strategy_from(io::read_json(strategy_path))
                                          : io::default_strategy(io::strategy_kind_from(kind));
  if (strategy_path.empty()) {
    strat.p_conf = cfg.p;
    strat.q_conf = cfg.q;
    strat.mode = cfg.mode();
    if (cfg.rho_bar) {
      if (strat.kind == StrategyKind::discretion_optioned) strat.risk_off->rho_bar = *cfg.rho_bar;
      else strat.risk_on.rho_bar = *cfg.rho_bar;
    }
    if (cfg.sigma_bar) strat.risk_on.sigma_bar = *cfg.sigma_bar;
    if (n_sia) strat.n_sia = *n_sia;
    strat.validate();
  }
  BacktestFeed feed;
  feed.prices = io::read_price_csv(prices_path);
  feed.rate = cfg.rate;
  feed.start = start >= 0 ? start : feed.weeks() - 53;
  if (!options_path.empty()) feed.options = io::read_option_series_csv(options_path, feed.weeks());
  require(!strat.risk_on.use_options || !feed.options.empty(), "backtest: strategy uses options but none were given");

  const BacktestReport rep = run_backtest(strat, feed, !no_costs);
  json weeks = json::array();
  for (const auto& w : rep.weeks)
    weeks.push_back({{"week", w.week}, {"value", w.value}, {"cash", w.cash}, {"solved", w.solved},
                     {"risk_off", w.risk_off}, {"sia", w.sia}, {"y", io::to_json(w.y)}, {"x", w.x}});
  json j{{"strategy", io::to_json(strat)}, {"metrics", io::to_json(rep.metrics)}, {"values", io::to_json(rep.values)},
         {"weeks", weeks}, {"log", rep.log}};
  io::write_json(cfg.path("report.json"), j);

  const std::string values = cfg.path("values.csv");
  {
    io::CsvWriter w(values, {"period", "value", "return"});
    for (Index t = 0; t < rep.values.size(); ++t)
      w.row(std::vector<double>{static_cast<double>(t), rep.values(t),
                                t > 0 ? rep.returns(t - 1) : std::numeric_limits<double>::quiet_NaN()});
  }
  const std::string hist = cfg.path("histogram.csv");
  {
    io::CsvWriter w(hist, {"bin_lo", "bin_hi", "count"});
    const double lo = rep.returns.minCoeff(), hi = rep.returns.maxCoeff();
    const double width = hi > lo ? (hi - lo) / bins : 1.0;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (Index t = 0; t < rep.returns.size(); ++t) {
      const int b = std::min(bins - 1, static_cast<int>((rep.returns(t) - lo) / width));
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b)
      w.row(std::vector<double>{lo + b * width, lo + (b + 1) * width, static_cast<double>(counts[static_cast<std::size_t>(b)])});
  }
  std::cout << json{{"strategy", rep.strategy}, {"metrics", io::to_json(rep.metrics)},
                    {"final_value", rep.values(rep.values.size() - 1)}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CoVaR-constrained portfolio tools"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--p", cfg.p, "VaR confidence of the distress event")->capture_default_str();
  app.add_option("--q", cfg.q, "CoVaR confidence")->capture_default_str();
  app.add_option("--rate", cfg.rate, "annual risk-free rate")->capture_default_str();
  app.add_option("--rho-bar", cfg.rho_bar, "CoVaR bound applied to every event");
  app.add_option("--sigma-bar", cfg.sigma_bar, "standard deviation bound");
  app.add_option("--risk-mode", cfg.risk_mode, "normal|worst-case")
      ->check(CLI::IsMember({"normal", "worst-case"}))
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();

  std::string doc_path;
  auto add_doc = [&](CLI::App* s, bool required = true) {
    auto* o = s->add_option("--doc", doc_path, "problem document (JSON)");
    if (required) o->required();
    o->check(CLI::ExistingFile);
  };

  Index stocks = 10, options = 25, sia = 5;
  bool per_stock = false;
  double u_stock = 0.1, u_option = 0.1, spread = 0.0;
  std::optional<double> option_cap = 0.3;
  auto* gen = app.add_subcommand("gen-instance", "random instance document");
  gen->add_option("--stocks", stocks)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--options", options)->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_flag("--per-stock", per_stock, "cycle option underlyings over the stocks");
  gen->add_option("--sia", sia, "size of the distress event from correlation clusters (0: none)")->capture_default_str();
  gen->add_option("--u-stock", u_stock, "notional bound per stock")->capture_default_str();
  gen->add_option("--u-option", u_option, "notional bound per option")->capture_default_str();
  gen->add_option("--option-cap", option_cap, "total option notional")->capture_default_str();
  gen->add_option("--spread", spread, "bid-ask spread as a fraction of price")->capture_default_str();

  int mc_paths = 100000;
  auto* covar = app.add_subcommand("covar", "CoVaR of the document portfolio");
  add_doc(covar);
  covar->add_option("--paths", mc_paths, "Monte Carlo paths (0 disables)")->capture_default_str();

  std::string objective = "max-return";
  auto* opt = app.add_subcommand("optimize", "solve the CoVaR-constrained problem");
  add_doc(opt);
  opt->add_option("--objective", objective)->check(CLI::IsMember({"max-return", "min-covar", "min-std"}))
      ->capture_default_str();

  int grid = 20;
  auto* fr = app.add_subcommand("frontier", "return over a (rho_bar, sigma_bar) grid");
  add_doc(fr);
  fr->add_option("--grid", grid, "points per axis")->capture_default_str();

  auto* feas = app.add_subcommand("feasibility", "controllability bounds per event");
  add_doc(feas);

  double vol1 = 0.2, vol2 = 0.3, mu1 = 0.1, mu2 = 0.1, rho = 0.5;
  int points = kDefaultGridPoints;
  auto* see = app.add_subcommand("seesaw", "two-stock CoVaR seesaw grid");
  add_doc(see, false);
  see->add_option("--vol1", vol1)->capture_default_str();
  see->add_option("--vol2", vol2)->capture_default_str();
  see->add_option("--mu1", mu1)->capture_default_str();
  see->add_option("--mu2", mu2)->capture_default_str();
  see->add_option("--rho", rho)->capture_default_str();
  see->add_option("--points", points)->capture_default_str();

  double sigma = 0.01;
  std::optional<double> loss_max;
  auto* cont = app.add_subcommand("contagion", "two-stock contagion surface");
  cont->add_option("--sigma", sigma, "common variance")->capture_default_str();
  cont->add_option("--loss-max", loss_max, "largest loss on the grid (default 3 sd)");
  cont->add_option("--points", points)->capture_default_str();

  std::size_t event = 0;
  auto* scen = app.add_subcommand("scenario", "value changes along a distress sweep");
  add_doc(scen);
  scen->add_option("--event", event)->capture_default_str();
  scen->add_option("--points", points)->capture_default_str();

  std::string prices_path, options_path, strategy_path, kind = "stock";
  int start = -1, bins = 20;
  std::optional<Index> n_sia;
  bool no_costs = false;
  auto* bt = app.add_subcommand("backtest", "weekly rebalancing backtest");
  bt->add_option("--prices", prices_path, "weekly prices CSV")->required()->check(CLI::ExistingFile);
  bt->add_option("--options", options_path, "option series CSV")->check(CLI::ExistingFile);
  bt->add_option("--strategy", strategy_path, "strategy JSON")->check(CLI::ExistingFile);
  bt->add_option("--kind", kind, "named strategy when no JSON is given")
      ->check(CLI::IsMember({"stock", "stock_control", "optioned", "optioned_control", "discretion_stock",
                             "discretion_optioned"}))
      ->capture_default_str();
  bt->add_option("--n-sia", n_sia, "stocks in the distress event (default 5)");
  bt->add_option("--start", start, "first trading week (default: last 52 weeks)");
  bt->add_flag("--no-costs", no_costs, "trade options at mid");
  bt->add_option("--bins", bins, "return histogram bins")->capture_default_str()->check(CLI::PositiveNumber);

  std::string returns_path, innovation = "raw";
  auto* eg = app.add_subcommand("estimate-garch", "GJR marginals and DCC correlation");
  eg->add_option("--returns", returns_path, "log returns CSV")->check(CLI::ExistingFile);
  eg->add_option("--prices", prices_path, "prices CSV")->check(CLI::ExistingFile);
  eg->add_option("--dcc", innovation, "raw|standardized")->check(CLI::IsMember({"raw", "standardized"}))
      ->capture_default_str();

  std::string pricer = "bs", market_path;
  int steps = 50;
  double min_bid = 0.0;
  int pricing_paths = 20000;
  auto* po = app.add_subcommand("price-options", "recompute option prices and greeks");
  add_doc(po);
  po->add_option("--pricer", pricer)->check(CLI::IsMember({"bs", "lsmc", "garch-mc"}))->capture_default_str();
  po->add_option("--paths", pricing_paths)->capture_default_str();
  po->add_option("--steps", steps, "exercise dates for lsmc")->capture_default_str();
  po->add_option("--garch", market_path, "estimate-garch output")->check(CLI::ExistingFile);
  po->add_option("--min-bid", min_bid, "drop options quoted below this bid")->capture_default_str();

  bool feed = false;
  int horizon = 52, sim_paths = 1;
  std::string measure = "physical";
  FeedOptions fo;
  auto* sim = app.add_subcommand("simulate", "GJR-DCC paths or a backtest feed");
  sim->add_option("--garch", market_path, "estimate-garch output (default: built-in market)")
      ->check(CLI::ExistingFile);
  sim->add_flag("--feed", feed, "write prices.csv and options.csv for backtest");
  sim->add_option("--horizon", horizon, "weeks")->capture_default_str();
  sim->add_option("--paths", sim_paths)->capture_default_str();
  sim->add_option("--measure", measure)->check(CLI::IsMember({"physical", "risk-neutral"}))->capture_default_str();
  sim->add_option("--stocks", fo.stocks, "stocks of the built-in market")->capture_default_str();
  sim->add_option("--history", fo.history, "feed weeks before trading")->capture_default_str();
  sim->add_option("--spread", fo.spread, "feed option spread")->capture_default_str();
  sim->add_option("--crash-weeks", fo.crash_weeks)->capture_default_str();
  sim->add_option("--crash-shock", fo.crash_shock)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    cfg.validate();
    if (*gen) return cmd_gen_instance(cfg, stocks, options, per_stock, sia, u_stock, u_option, option_cap, spread);
    if (*covar) return cmd_covar(cfg, doc_path, mc_paths);
    if (*opt) return cmd_optimize(cfg, doc_path, objective);
    if (*fr) return cmd_frontier(cfg, doc_path, grid);
    if (*feas) return cmd_feasibility(cfg, doc_path);
    if (*see) return cmd_seesaw(cfg, doc_path, vol1, vol2, mu1, mu2, rho, points);
    if (*cont) return cmd_contagion(cfg, sigma, points, loss_max);
    if (*scen) return cmd_scenario(cfg, doc_path, event, points);
    if (*bt) return cmd_backtest(cfg, prices_path, options_path, strategy_path, kind, n_sia, start, no_costs, bins);
    if (*eg) return cmd_estimate_garch(cfg, returns_path, prices_path, innovation);
    if (*po) return cmd_price_options(cfg, doc_path, pricer, pricing_paths, steps, market_path, min_bid);
    if (*sim) return cmd_simulate(cfg, market_path, feed, horizon, sim_paths, measure, fo);
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InfeasibleSystemError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed document: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
