#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "covaropt/core.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/normal.hpp"

namespace covaropt {

/// Gaussian one-period model of stock price changes: dp ~ N(mu, sigma).
/// All quantities are in currency units over a horizon of `dt` years.
class MarketModel {
 public:
  MarketModel(Vector prices, Vector mu, Matrix sigma, double dt)
      : prices_(std::move(prices)), mu_(std::move(mu)), sigma_(std::move(sigma)), dt_(dt) {
    const Index m = prices_.size();
    require_dims(m > 0, "MarketModel: empty universe");
    require_dims(mu_.size() == m && sigma_.rows() == m && sigma_.cols() == m,
                 "MarketModel: dimensions of prices, mu and sigma disagree");
    require(dt_ > 0.0, "MarketModel: horizon must be positive");
    require((prices_.array() > 0.0).all(), "MarketModel: prices must be positive");
    require(linalg::is_symmetric(sigma_, 1e-10), "MarketModel: covariance must be symmetric");
    sigma_ = linalg::symmetrize(sigma_);
    Eigen::LLT<Matrix> llt(sigma_);
    if (llt.info() != Eigen::Success || linalg::inverse_condition(sigma_) < 1e-14)
      throw DomainError("MarketModel: covariance must be positive definite");
  }

  Index size() const { return prices_.size(); }
  const Vector& prices() const { return prices_; }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  double dt() const { return dt_; }

  double sd(Index i) const { return std::sqrt(sigma_(i, i)); }
  Matrix correlation() const { return linalg::cov_to_corr(sigma_); }

 private:
  Vector prices_;
  Vector mu_;
  Matrix sigma_;
  double dt_;
};

/// Individual VaR of stock i at confidence p: alpha_p sqrt(sigma_ii) - mu_i.
inline double asset_var(const MarketModel& model, Index i, double p_conf) {
  require(i >= 0 && i < model.size(), "asset_var: stock index out of range");
  require(p_conf >= 0.5 && p_conf < 1.0, "asset_var: confidence must lie in [0.5,1)");
  return normal_quantile(p_conf) * model.sd(i) - model.mu()(i);
}

/// The event {dp_i = -k_i, i in I}. Loss levels default to the individual
/// VaRs; deeper stress is expressed by building the event from explicit
/// losses.
class DistressEvent {
 public:
  static DistressEvent at_var(const MarketModel& model, IndexSet distressed, double p_conf) {
    Vector k(static_cast<Index>(distressed.size()));
    for (std::size_t a = 0; a < distressed.size(); ++a)
      k(static_cast<Index>(a)) = asset_var(model, distressed[a], p_conf);
    return DistressEvent(model.size(), std::move(distressed), std::move(k), p_conf);
  }

  static DistressEvent with_losses(Index universe, IndexSet distressed, Vector losses) {
    return DistressEvent(universe, std::move(distressed), std::move(losses), 0.0);
  }

  const IndexSet& distressed() const { return distressed_; }
  const IndexSet& others() const { return others_; }
  const Vector& losses() const { return losses_; }
  /// Confidence the losses were set at; 0 for manually specified losses.
  double confidence() const { return p_conf_; }
  Index universe() const { return universe_; }

 private:
  DistressEvent(Index universe, IndexSet distressed, Vector losses, double p_conf)
      : universe_(universe), distressed_(std::move(distressed)), losses_(std::move(losses)),
        p_conf_(p_conf) {
    require_dims(!distressed_.empty(), "DistressEvent: distressed set must be nonempty");
    require_dims(losses_.size() == static_cast<Index>(distressed_.size()),
                 "DistressEvent: one loss level per distressed stock");
    std::vector<bool> seen(static_cast<std::size_t>(universe_), false);
    for (Index i : distressed_) {
      require_dims(i >= 0 && i < universe_, "DistressEvent: index out of range");
      require_dims(!seen[static_cast<std::size_t>(i)], "DistressEvent: duplicate index");
      seen[static_cast<std::size_t>(i)] = true;
    }
    others_ = complement(distressed_, universe_);
  }

  Index universe_;
  IndexSet distressed_;
  IndexSet others_;
  Vector losses_;
  double p_conf_;
};

/// Law of dp_J given the distress event.
///
/// `cond_mean` and `cond_cov` are ordered like `event.others()`; `stacked`
/// is indexed by public stock index with h_I = -k and h_J = c.
struct ConditionalLaw {
  IndexSet others;
  IndexSet distressed;
  Vector losses;
  Vector cond_mean;
  Matrix cond_cov;
  Vector stacked;
};

/// Threshold on sigma_min / sigma_max of Sigma_II below which conditioning is
/// refused.
inline constexpr double kSingularCutoff = 1e-10;

inline ConditionalLaw conditional_law(const MarketModel& model, const DistressEvent& event) {
  require_dims(event.universe() == model.size(), "conditional_law: event/model size mismatch");
  const IndexSet& I = event.distressed();
  const IndexSet& J = event.others();
  const Matrix s_ii = take(model.sigma(), I, I);
  if (linalg::inverse_condition(s_ii) < kSingularCutoff)
    throw SingularMatrixError("conditional_law: Sigma_II is numerically singular");

  ConditionalLaw law;
  law.others = J;
  law.distressed = I;
  law.losses = event.losses();

  const Matrix s_ji = take(model.sigma(), J, I);
  const Matrix s_jj = take(model.sigma(), J, J);
  Eigen::LDLT<Matrix> ldlt(s_ii);
  const Vector shift = event.losses() + take(model.mu(), I);
  law.cond_mean = take(model.mu(), J) - s_ji * ldlt.solve(shift);
  law.cond_cov = linalg::symmetrize(s_jj - s_ji * ldlt.solve(s_ji.transpose()));

  law.stacked = Vector::Zero(model.size());
  for (std::size_t a = 0; a < I.size(); ++a) law.stacked(I[a]) = -event.losses()(static_cast<Index>(a));
  for (std::size_t a = 0; a < J.size(); ++a) law.stacked(J[a]) = law.cond_mean(static_cast<Index>(a));
  return law;
}

/// Moments of price changes from a (T x m) price panel sampled every
/// `sample_dt` years, rescaled to `horizon` and expressed in currency at the
/// last observed prices.
inline MarketModel estimate_from_prices(const Matrix& prices, double sample_dt, double horizon) {
  require_dims(prices.rows() >= 3, "estimate_from_prices: need at least 3 observations");
  require((prices.array() > 0.0).all(), "estimate_from_prices: prices must be positive");
  const Index t = prices.rows() - 1;
  const Matrix logret =
      (prices.bottomRows(t).array() / prices.topRows(t).array()).log().matrix();
  const Vector mean = logret.colwise().mean().transpose();
  const Matrix centered = logret.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(t - 1);
  const double scale = horizon / sample_dt;
  const Vector last = prices.row(t).transpose();
  return MarketModel(last, last.cwiseProduct(mean) * scale,
                     last.asDiagonal() * cov * last.asDiagonal() * scale, horizon);
}

}  // namespace covaropt
