#pragma once

#include <random>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/hedging.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/market_model.hpp"

namespace covaropt {

/// Randomly generated stock/option universe with unit stock prices and
/// Black-Scholes priced one-year options.
struct Instance {
  MarketModel model;
  Vector annual_mu;
  Vector annual_vol;
  Matrix correlation;
  double rate = 0.05;
  std::vector<OptionContract> options;
  std::vector<ScalarGreeks> option_greeks;

  std::vector<GreekSet> greeks() const {
    std::vector<GreekSet> out;
    for (std::size_t j = 0; j < options.size(); ++j)
      out.push_back(GreekSet::single(model.size(), options[j].underlying, option_greeks[j]));
    return out;
  }
  Vector mid_prices() const {
    Vector d(static_cast<Index>(options.size()));
    for (std::size_t j = 0; j < options.size(); ++j) d(static_cast<Index>(j)) = options[j].mid();
    return d;
  }
  /// Options grouped by underlying, in generation order.
  OptionMenu menu() const {
    OptionMenu out(static_cast<std::size_t>(model.size()));
    for (std::size_t j = 0; j < options.size(); ++j) {
      const auto& g = option_greeks[j];
      out[static_cast<std::size_t>(options[j].underlying)].push_back({g.price, g.delta, g.gamma, g.theta});
    }
    return out;
  }
};

/// Correlation from a row-normalized random lower-triangular matrix.
inline Matrix random_correlation(Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Matrix l = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j <= i; ++j) l(i, j) = u01(rng);
    l.row(i) /= l.row(i).norm();
  }
  Matrix c = l * l.transpose();
  c.diagonal().setOnes();
  return c;
}

/// Annual vol ~ U(0.1, 0.3), annual drift 0.15 + vol / 2, moneyness
/// ~ U(0.8, 1.2), call/put and underlying uniform. Option underlyings are
/// drawn at random unless `per_stock` is set, in which case they cycle over
/// the stocks.
inline Instance generate_instance(Index stocks, Index n_options, std::uint64_t seed,
                                  double dt = kWeek, double rate = 0.05, bool per_stock = false) {
  require_dims(stocks >= 1 && n_options >= 0, "generate_instance: invalid sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Matrix corr = random_correlation(stocks, rng);
  Vector vol(stocks), mu(stocks);
  for (Index i = 0; i < stocks; ++i) {
    vol(i) = 0.1 + 0.2 * u01(rng);
    mu(i) = 0.15 + 0.5 * vol(i);
  }
  const Vector prices = Vector::Ones(stocks);
  const Matrix cov = vol.asDiagonal() * corr * vol.asDiagonal() * dt;
  Instance inst{MarketModel(prices, mu * dt, cov, dt), mu, vol, corr, rate, {}, {}};

  std::uniform_int_distribution<Index> pick(0, stocks - 1);
  for (Index j = 0; j < n_options; ++j) {
    OptionContract c;
    c.underlying = per_stock ? j % stocks : pick(rng);
    c.kind = u01(rng) < 0.5 ? OptionKind::call : OptionKind::put;
    c.style = ExerciseStyle::european;
    c.strike = (0.8 + 0.4 * u01(rng)) * prices(c.underlying);
    c.expiry = 1.0;
    const ScalarGreeks g =
        bs_price_and_greeks(prices(c.underlying), c.strike, vol(c.underlying), rate, c.expiry, c.kind);
    c.bid = c.ask = g.price;
    inst.options.push_back(c);
    inst.option_greeks.push_back(g);
  }
  return inst;
}

}  // namespace covaropt
