#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/risk.hpp"

namespace covaropt {

using OptionMenu = std::vector<std::vector<OptionLeg>>;

struct HedgeResult {
  std::vector<OptionedAsset> assets;
  double residual = 0.0;  ///< sqrt of the sum of squared pairwise correlations
  double mean_abs_correlation = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Pairwise correlations of optioned assets under the unconditional law,
/// upper triangle stacked row by row.
inline Vector pairwise_correlations(const std::vector<OptionedAsset>& assets, const MarketModel& model) {
  const std::size_t m = assets.size();
  Vector out(static_cast<Index>(m * (m - 1) / 2));
  Index r = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      out(r++) = optioned_asset_correlation(assets[i], assets[j], model.mu(), model.sigma());
  return out;
}

namespace detail {

inline double mean_abs(const Vector& v) { return v.size() ? v.cwiseAbs().mean() : 0.0; }

// Stock amount closing the budget row for given option amounts.
inline double budget_stock_amount(double price, const std::vector<OptionLeg>& legs, const Vector& a) {
  double spent = 0.0;
  for (std::size_t j = 0; j < legs.size(); ++j) spent += a(static_cast<Index>(j)) * legs[j].price;
  return (price - spent) / price;
}

}  // namespace detail

/// Chooses option weights per stock so that optioned assets are as close to
/// pairwise uncorrelated as the menu allows. A stock with two or more
/// options whose (price, delta, gamma) rows have full rank is made
/// Delta-Gamma neutral, which zeroes all of its covariances. The remaining
/// stocks with options are tuned by Levenberg-Marquardt on the stacked
/// correlations; `warm_start` gives initial option amounts per stock.
inline HedgeResult zero_correlation_weights(const MarketModel& model, const OptionMenu& menu,
                                            const std::vector<Vector>* warm_start = nullptr,
                                            int max_iter = 200) {
  const Index m = model.size();
  require_dims(static_cast<Index>(menu.size()) == m, "zero_correlation_weights: one menu per stock");
  const Vector& p = model.prices();

  std::vector<OptionedAsset> assets(static_cast<std::size_t>(m));
  std::vector<Index> free_stock;
  std::vector<Index> offset;
  Index n_free = 0;
  for (Index i = 0; i < m; ++i) {
    const auto& legs = menu[static_cast<std::size_t>(i)];
    const Index n = static_cast<Index>(legs.size());
    bool neutral = false;
    if (n >= 2) {
      try {
        assets[static_cast<std::size_t>(i)] =
            make_optioned_asset(i, p(i), legs, OptionedTargets::neutral());
        neutral = true;
      } catch (const InfeasibleSystemError&) {
      }
    }
    if (!neutral) {
      Vector a = Vector::Zero(n);
      if (warm_start && static_cast<std::size_t>(i) < warm_start->size()) {
        const Vector& w = (*warm_start)[static_cast<std::size_t>(i)];
        a.head(std::min(n, w.size())) = w.head(std::min(n, w.size()));
      }
      assets[static_cast<std::size_t>(i)] =
          compose_optioned_asset(i, p(i), detail::budget_stock_amount(p(i), legs, a), a, legs);
      if (n > 0) {
        free_stock.push_back(i);
        offset.push_back(n_free);
        n_free += n;
      }
    }
  }

  auto unpack = [&](const Vector& z, std::vector<OptionedAsset>& out) {
    for (std::size_t f = 0; f < free_stock.size(); ++f) {
      const Index i = free_stock[f];
      const auto& legs = menu[static_cast<std::size_t>(i)];
      const Vector a = z.segment(offset[f], static_cast<Index>(legs.size()));
      out[static_cast<std::size_t>(i)] =
          compose_optioned_asset(i, p(i), detail::budget_stock_amount(p(i), legs, a), a, legs);
    }
  };
  auto residuals = [&](const Vector& z) {
    std::vector<OptionedAsset> trial = assets;
    unpack(z, trial);
    return pairwise_correlations(trial, model);
  };

  HedgeResult res;
  Vector z(n_free);
  for (std::size_t f = 0; f < free_stock.size(); ++f)
    z.segment(offset[f], static_cast<Index>(menu[static_cast<std::size_t>(free_stock[f])].size())) =
        assets[static_cast<std::size_t>(free_stock[f])].option_amounts;

  Vector r = residuals(z);
  double cost = r.squaredNorm();
  double damping = 1e-3;
  res.converged = n_free == 0 || cost < 1e-24;
  for (int it = 0; it < max_iter && !res.converged; ++it) {
    res.iterations = it + 1;
    Matrix jac(r.size(), n_free);
    for (Index k = 0; k < n_free; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(z(k)));
      Vector zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      jac.col(k) = (residuals(zp) - residuals(zm)) / (2.0 * h);
    }
    const Matrix jtj = jac.transpose() * jac;
    const Vector grad = jac.transpose() * r;
    if (grad.norm() < 1e-12) {
      res.converged = true;
      break;
    }
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Matrix a = jtj;
      a.diagonal() += damping * (jtj.diagonal().array() + 1e-12).matrix();
      const Vector step = a.ldlt().solve(-grad);
      const Vector zn = z + step;
      const Vector rn = residuals(zn);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        const double rel = (cost - cn) / std::max(cost, 1e-300);
        z = zn;
        r = rn;
        cost = cn;
        damping = std::max(damping / 3.0, 1e-12);
        improved = true;
        if (rel < 1e-12 || cost < 1e-24) res.converged = true;
        break;
      }
      damping *= 4.0;
    }
    if (!improved) {
      res.converged = true;
      break;
    }
  }
  unpack(z, assets);
  res.assets = std::move(assets);
  const Vector corr = pairwise_correlations(res.assets, model);
  res.residual = corr.norm();
  res.mean_abs_correlation = detail::mean_abs(corr);
  return res;
}

struct HedgeCurvePoint {
  int options = 0;
  double mean_abs_correlation = 0.0;
  double residual = 0.0;
};

/// Adds options from `pool` one at a time, cycling over stocks (one option
/// per stock per round), and re-solves after each addition starting from
/// the previous weights. A re-solve that ends with a larger mean |corr|
/// than its warm start is discarded in favour of the warm start, which is
/// still admissible with the new option held at zero.
inline std::vector<HedgeCurvePoint> correlation_hedging_curve(const MarketModel& model,
                                                              const OptionMenu& pool,
                                                              int max_options) {
  const Index m = model.size();
  require_dims(static_cast<Index>(pool.size()) == m, "correlation_hedging_curve: one pool per stock");
  std::vector<std::pair<Index, std::size_t>> order;
  std::size_t depth = 0;
  for (const auto& legs : pool) depth = std::max(depth, legs.size());
  for (std::size_t round = 0; round < depth; ++round)
    for (Index i = 0; i < m; ++i)
      if (round < pool[static_cast<std::size_t>(i)].size()) order.emplace_back(i, round);
  max_options = std::min<int>(max_options, static_cast<int>(order.size()));

  OptionMenu menu(static_cast<std::size_t>(m));
  std::vector<Vector> weights(static_cast<std::size_t>(m));
  std::vector<HedgeCurvePoint> curve;
  HedgeResult current = zero_correlation_weights(model, menu);
  curve.push_back({0, current.mean_abs_correlation, current.residual});
  for (int k = 1; k <= max_options; ++k) {
    const auto [stock, idx] = order[static_cast<std::size_t>(k - 1)];
    menu[static_cast<std::size_t>(stock)].push_back(pool[static_cast<std::size_t>(stock)][idx]);
    for (Index i = 0; i < m; ++i) weights[static_cast<std::size_t>(i)] = current.assets[static_cast<std::size_t>(i)].option_amounts;
    HedgeResult next = zero_correlation_weights(model, menu, &weights);
    if (next.mean_abs_correlation > current.mean_abs_correlation) {
      HedgeResult held = zero_correlation_weights(model, menu, &weights, 0);
      if (held.mean_abs_correlation <= next.mean_abs_correlation) next = std::move(held);
    }
    current = std::move(next);
    curve.push_back({k, current.mean_abs_correlation, current.residual});
  }
  return curve;
}

}  // namespace covaropt
