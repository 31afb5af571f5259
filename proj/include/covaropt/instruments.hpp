#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/econometrics.hpp"
#include "covaropt/normal.hpp"

namespace covaropt {

enum class OptionKind { call, put };
enum class ExerciseStyle { european, american };

struct OptionContract {
  Index underlying = 0;
  OptionKind kind = OptionKind::call;
  ExerciseStyle style = ExerciseStyle::european;
  double strike = 1.0;
  double expiry = 1.0;
  double bid = 0.0;
  double ask = 0.0;

  double mid() const { return 0.5 * (bid + ask); }
  double payoff(double spot) const {
    return kind == OptionKind::call ? std::max(spot - strike, 0.0) : std::max(strike - spot, 0.0);
  }
  void validate() const {
    require(strike > 0.0, "OptionContract: strike must be positive");
    require(expiry > 0.0, "OptionContract: expiry must be positive");
    require(bid >= 0.0 && ask >= bid, "OptionContract: need ask >= bid >= 0");
  }
};

/// Price and sensitivities of a single-underlying instrument.
struct ScalarGreeks {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;  ///< value drift per year of calendar time
};

/// Sensitivities of one option to the whole stock vector.
struct GreekSet {
  Vector delta;
  Matrix gamma;
  double theta = 0.0;

  static GreekSet single(Index universe, Index underlying, double delta, double gamma, double theta) {
    require_dims(underlying >= 0 && underlying < universe, "GreekSet: underlying out of range");
    GreekSet g;
    g.delta = Vector::Zero(universe);
    g.gamma = Matrix::Zero(universe, universe);
    g.delta(underlying) = delta;
    g.gamma(underlying, underlying) = gamma;
    g.theta = theta;
    return g;
  }
  static GreekSet single(Index universe, Index underlying, const ScalarGreeks& s) {
    return single(universe, underlying, s.delta, s.gamma, s.theta);
  }
};

// ---------------------------------------------------------------------------
// Black-Scholes

inline ScalarGreeks bs_price_and_greeks(double spot, double strike, double vol, double rate,
                                        double expiry, OptionKind kind) {
  require(spot > 0.0 && strike > 0.0 && vol > 0.0 && expiry > 0.0,
          "bs_price_and_greeks: spot, strike, vol and expiry must be positive");
  const double st = vol * std::sqrt(expiry);
  const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * expiry) / st;
  const double d2 = d1 - st;
  const double disc = std::exp(-rate * expiry);
  ScalarGreeks g;
  g.gamma = normal_pdf(d1) / (spot * st);
  const double decay = -spot * normal_pdf(d1) * vol / (2.0 * std::sqrt(expiry));
  if (kind == OptionKind::call) {
    g.price = spot * normal_cdf(d1) - strike * disc * normal_cdf(d2);
    g.delta = normal_cdf(d1);
    g.theta = decay - rate * strike * disc * normal_cdf(d2);
  } else {
    g.price = strike * disc * normal_cdf(-d2) - spot * normal_cdf(-d1);
    g.delta = normal_cdf(d1) - 1.0;
    g.theta = decay + rate * strike * disc * normal_cdf(-d2);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Monte Carlo pricing

struct McPrice {
  double price = 0.0;
  double std_error = 0.0;
  std::string warning;
};

/// Lognormal stock under the risk-neutral measure.
struct GbmDynamics {
  double vol = 0.2;
  double rate = 0.05;
};

inline constexpr int kMinLsmcPaths = 1000;

/// Longstaff-Schwartz on supplied spot paths (rows = path, col 0 = today,
/// equally spaced by `step` years). Continuation values regress on
/// (1, s, s^2) over in-the-money paths; exercise is also allowed today.
inline McPrice lsmc_on_paths(const Matrix& spots, double step, double rate, const OptionContract& c) {
  const Index n = spots.rows();
  const Index steps = spots.cols() - 1;
  require_dims(n >= 1 && steps >= 1, "lsmc_on_paths: empty path set");
  const double disc = std::exp(-rate * step);
  Vector cash(n);
  for (Index p = 0; p < n; ++p) cash(p) = c.payoff(spots(p, steps));

  for (Index t = steps - 1; t >= 1; --t) {
    cash *= disc;
    if (c.style == ExerciseStyle::european) continue;
    std::vector<Index> itm;
    for (Index p = 0; p < n; ++p)
      if (c.payoff(spots(p, t)) > 0.0) itm.push_back(p);
    if (itm.empty()) continue;
    Matrix basis(static_cast<Index>(itm.size()), 3);
    Vector target(static_cast<Index>(itm.size()));
    for (std::size_t a = 0; a < itm.size(); ++a) {
      const double s = spots(itm[a], t) / c.strike;
      basis.row(static_cast<Index>(a)) << 1.0, s, s * s;
      target(static_cast<Index>(a)) = cash(itm[a]);
    }
    const Vector beta = basis.completeOrthogonalDecomposition().solve(target);
    const Vector cont = basis * beta;
    for (std::size_t a = 0; a < itm.size(); ++a) {
      const double ex = c.payoff(spots(itm[a], t));
      if (ex > cont(static_cast<Index>(a))) cash(itm[a]) = ex;
    }
  }
  cash *= disc;

  McPrice out;
  const double mean = cash.mean();
  const double sd = n > 1 ? std::sqrt((cash.array() - mean).square().sum() / (n - 1.0)) : 0.0;
  out.price = mean;
  out.std_error = sd / std::sqrt(static_cast<double>(n));
  if (c.style == ExerciseStyle::american) {
    const double now = c.payoff(spots(0, 0));
    if (now > out.price) {
      out.price = now;
      out.std_error = 0.0;
    }
  }
  return out;
}

/// GBM spot paths from `spot` over `steps` equal steps to `expiry`; path p
/// uses stream mix_seed(seed, p).
inline Matrix simulate_gbm(double spot, const GbmDynamics& dyn, double expiry, int steps, int paths,
                           std::uint64_t seed) {
  Matrix out(paths, steps + 1);
  const double h = expiry / steps;
  const double drift = (dyn.rate - 0.5 * dyn.vol * dyn.vol) * h;
  const double vol = dyn.vol * std::sqrt(h);
  parallel_for(static_cast<std::size_t>(paths), [&](std::size_t p) {
    std::mt19937_64 rng(mix_seed(seed, p));
    std::normal_distribution<double> gauss;
    const Index row = static_cast<Index>(p);
    out(row, 0) = spot;
    double s = spot;
    for (int t = 1; t <= steps; ++t) {
      s *= std::exp(drift + vol * gauss(rng));
      out(row, t) = s;
    }
  });
  return out;
}

inline McPrice lsmc_american(int paths, int steps, const GbmDynamics& dyn, const OptionContract& c,
                             double spot, std::uint64_t seed) {
  c.validate();
  require(steps >= 2, "lsmc_american: need at least 2 exercise steps");
  require(paths >= 1, "lsmc_american: need at least one path");
  require(spot > 0.0 && dyn.vol >= 0.0, "lsmc_american: invalid spot or vol");
  McPrice out = lsmc_on_paths(simulate_gbm(spot, dyn, c.expiry, steps, paths, seed),
                              c.expiry / steps, dyn.rate, c);
  if (paths < kMinLsmcPaths) out.warning = "fewer than 1000 paths; estimate is noisy";
  return out;
}

/// Pricer as a function of (spot, time to expiry).
using SpotPricer = std::function<double(double spot, double expiry)>;

inline constexpr double kDefaultSpotBump = 0.01;
inline constexpr double kDefaultThetaBump = kWeek;

/// Central spot differences with relative bump `bump`, theta from a calendar
/// step of `theta_bump` years. Stochastic pricers must reuse their seed
/// across calls so the bumps share random numbers.
inline ScalarGreeks finite_diff_greeks(const SpotPricer& pricer, double spot, double expiry,
                                       double bump = kDefaultSpotBump,
                                       double theta_bump = kDefaultThetaBump) {
  require(bump > 0.0 && theta_bump > 0.0, "finite_diff_greeks: bumps must be positive");
  require(spot > 0.0 && expiry > 0.0, "finite_diff_greeks: spot and expiry must be positive");
  const double h = bump * spot;
  ScalarGreeks g;
  g.price = pricer(spot, expiry);
  const double up = pricer(spot + h, expiry);
  const double down = pricer(spot - h, expiry);
  g.delta = (up - down) / (2.0 * h);
  g.gamma = (up - 2.0 * g.price + down) / (h * h);
  const double tb = std::min(theta_bump, 0.5 * expiry);
  g.theta = (pricer(spot, expiry - tb) - g.price) / tb;
  return g;
}

/// Discounted mean payoff under the risk-neutral GJR dynamics of one stock,
/// stepping weekly from the given variance/innovation state. American
/// contracts go through Longstaff-Schwartz on the same paths.
inline McPrice garch_mc_price(const OptionContract& c, const GjrGarch& garch, double rate,
                              double spot, double current_var, double last_eps, int paths,
                              std::uint64_t seed, double period = kWeek) {
  c.validate();
  garch.validate();
  require(spot > 0.0 && current_var > 0.0, "garch_mc_price: spot and variance must be positive");
  require(paths >= 1, "garch_mc_price: need at least one path");
  const int steps = std::max(1, static_cast<int>(std::lround(c.expiry / period)));
  GarchSpec spec{{garch}, rate, period};
  DccSpec dcc;
  dcc.uncond_corr = Matrix::Identity(1, 1);
  MarketState state{Vector::Constant(1, last_eps), Vector::Constant(1, current_var),
                    Matrix::Identity(1, 1)};
  const auto sims = simulate_risk_neutral(spec, dcc, state, steps, paths, seed);
  Matrix spots(paths, steps + 1);
  for (int p = 0; p < paths; ++p) {
    spots(p, 0) = spot;
    double s = spot;
    for (int t = 0; t < steps; ++t) {
      s *= std::exp(sims[static_cast<std::size_t>(p)].log_returns(t, 0));
      spots(p, t + 1) = s;
    }
  }
  return lsmc_on_paths(spots, period, rate, c);
}

// ---------------------------------------------------------------------------
// Optioned assets

/// Price and sensitivities of one option available on a stock.
struct OptionLeg {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
};

/// One unit of stock i repackaged with options on it so that its value is
/// the stock price.
struct OptionedAsset {
  Index stock = 0;
  double price = 0.0;
  double stock_amount = 1.0;
  Vector option_amounts;
  double delta = 1.0;
  double gamma = 0.0;
  double theta = 0.0;

  double budget_residual(const std::vector<OptionLeg>& legs) const {
    double v = stock_amount * price;
    for (std::size_t j = 0; j < legs.size(); ++j) v += option_amounts(static_cast<Index>(j)) * legs[j].price;
    return v - price;
  }
};

struct OptionedTargets {
  double delta = 1.0;
  double gamma = 0.0;
  std::optional<double> theta;

  static OptionedTargets neutral() { return {0.0, 0.0, std::nullopt}; }
};

/// Recomputes the composite Greeks from holdings.
inline OptionedAsset compose_optioned_asset(Index stock, double price, double stock_amount,
                                            const Vector& amounts,
                                            const std::vector<OptionLeg>& legs) {
  require_dims(amounts.size() == static_cast<Index>(legs.size()),
               "compose_optioned_asset: one amount per option");
  OptionedAsset a;
  a.stock = stock;
  a.price = price;
  a.stock_amount = stock_amount;
  a.option_amounts = amounts;
  a.delta = stock_amount;
  a.gamma = 0.0;
  a.theta = 0.0;
  for (std::size_t j = 0; j < legs.size(); ++j) {
    const double w = amounts(static_cast<Index>(j));
    a.delta += w * legs[j].delta;
    a.gamma += w * legs[j].gamma;
    a.theta += w * legs[j].theta;
  }
  return a;
}

/// Solves the rows (price, delta, gamma[, theta]) for (b, a_1..a_n); the
/// minimum-norm solution is returned when the system is underdetermined.
/// With `no_short_stock`, a negative minimum-norm b is replaced by the
/// minimum-norm solution at b = 0, which is the constrained optimum.
inline OptionedAsset make_optioned_asset(Index stock, double price,
                                         const std::vector<OptionLeg>& legs,
                                         const OptionedTargets& targets,
                                         bool no_short_stock = false) {
  require(price > 0.0, "make_optioned_asset: price must be positive");
  const Index n = static_cast<Index>(legs.size());
  const Index rows = targets.theta ? 4 : 3;
  Matrix a(rows, n + 1);
  Vector rhs(rows);
  a.col(0) << price, 1.0, 0.0;
  if (rows == 4) a(3, 0) = 0.0;
  for (Index j = 0; j < n; ++j) {
    const auto& l = legs[static_cast<std::size_t>(j)];
    a(0, j + 1) = l.price;
    a(1, j + 1) = l.delta;
    a(2, j + 1) = l.gamma;
    if (rows == 4) a(3, j + 1) = l.theta;
  }
  rhs << price, targets.delta, targets.gamma;
  if (rows == 4) rhs(3) = *targets.theta;

  // Rows are rescaled so the rank test does not depend on units.
  const Vector row_scale = a.rowwise().norm().cwiseMax(1e-300).cwiseInverse();
  const Matrix as = row_scale.asDiagonal() * a;
  const Vector rs = row_scale.asDiagonal() * rhs;

  auto solve = [&](const Matrix& m, const Vector& r) -> Vector {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
    cod.setThreshold(1e-12);
    const Vector v = cod.solve(r);
    if ((m * v - r).norm() > 1e-9 * std::max(1.0, r.norm()))
      throw InfeasibleSystemError(
          "make_optioned_asset: targets are not attainable with the given options");
    return v;
  };

  Vector v = solve(as, rs);
  if (no_short_stock && v(0) < 0.0) {
    Vector tail = n > 0 ? solve(as.rightCols(n), rs) : Vector();
    v = Vector::Zero(n + 1);
    if (n > 0) v.tail(n) = tail;
  }
  return compose_optioned_asset(stock, price, v(0), v.tail(n), legs);
}

}  // namespace covaropt
