#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/instruments.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/normal.hpp"

namespace covaropt {

/// Stock holdings y (shares) and option holdings x (contracts).
struct Portfolio {
  Vector y;
  Vector x;

  static Portfolio stocks(Vector y) { return {std::move(y), Vector()}; }
  bool stock_only() const { return x.size() == 0 || x.isZero(0.0); }
};

// ---------------------------------------------------------------------------
// Stock portfolios

/// Exact Gaussian CoVaR: alpha_q sqrt(y_J' E y_J) - c' y_J + k' y_I.
inline double stock_covar(const ConditionalLaw& law, const Vector& y, double q_conf) {
  require(q_conf >= 0.5 && q_conf < 1.0, "stock_covar: confidence must lie in [0.5,1)");
  const Vector y_j = take(y, law.others);
  const Vector y_i = take(y, law.distressed);
  const double var = std::max(0.0, y_j.dot(law.cond_cov * y_j));
  return normal_quantile(q_conf) * std::sqrt(var) - law.cond_mean.dot(y_j) + law.losses.dot(y_i);
}

inline double stock_covar(const MarketModel& model, const DistressEvent& event, const Vector& y,
                          double q_conf) {
  require_dims(y.size() == model.size(), "stock_covar: holdings size mismatch");
  return stock_covar(conditional_law(model, event), y, q_conf);
}

/// CoVaR multiplier of the two-stock example: alpha_q sqrt(1-rho^2) + alpha_p rho.
inline double two_asset_psi(double rho, double p_conf, double q_conf) {
  require(std::abs(rho) <= 1.0, "two_asset_psi: |rho| must be <= 1");
  return normal_quantile(q_conf) * std::sqrt(std::max(0.0, 1.0 - rho * rho)) +
         normal_quantile(p_conf) * rho;
}

// ---------------------------------------------------------------------------
// Delta-Gamma moments

/// Portfolio-independent pieces of the conditional mean and variance of
/// dv(x, y) = sum_i x_i (theta_i dt + delta_i' dp + dp' Gamma_i dp / 2) + y' dp.
struct ConditionalMoments {
  Vector g;  ///< per option
  Vector h;  ///< per stock
  Matrix R;  ///< over (x, y_J)
  Matrix S;  ///< over x
  IndexSet others;
  double mean = 0.0;
  double variance = 0.0;

  Vector stack_xj(const Vector& x, const Vector& y) const {
    Vector w(x.size() + static_cast<Index>(others.size()));
    w << x, take(y, others);
    return w;
  }
  void evaluate(const Vector& x, const Vector& y) {
    mean = g.dot(x) + h.dot(y);
    const Vector w = stack_xj(x, y);
    variance = std::max(0.0, w.dot(R * w) + 0.5 * x.dot(S * x));
  }
};

struct UnconditionalMoments {
  Vector eta;  ///< per option
  Vector mu;   ///< per stock
  Matrix Psi;  ///< over (x, y)
  Matrix Phi;  ///< over x
  double mean = 0.0;
  double variance = 0.0;

  void evaluate(const Vector& x, const Vector& y) {
    mean = eta.dot(x) + mu.dot(y);
    Vector w(x.size() + y.size());
    w << x, y;
    variance = std::max(0.0, w.dot(Psi * w) + 0.5 * x.dot(Phi * x));
  }
};

namespace detail {
inline void check_greeks(const std::vector<GreekSet>& greeks, Index m) {
  for (const auto& gs : greeks)
    require_dims(gs.delta.size() == m && gs.gamma.rows() == m && gs.gamma.cols() == m,
                 "greeks must be sized to the stock universe");
}
inline void check_portfolio(const Portfolio& pf, Index m, std::size_t n) {
  require_dims(pf.y.size() == m, "portfolio: one stock holding per stock");
  require_dims(pf.x.size() == static_cast<Index>(n) || (n == 0 && pf.x.size() == 0),
               "portfolio: one option holding per option");
}
}  // namespace detail

inline ConditionalMoments conditional_moment_components(const MarketModel& model,
                                                        const ConditionalLaw& law,
                                                        const std::vector<GreekSet>& greeks) {
  const Index m = model.size();
  detail::check_greeks(greeks, m);
  const Index n = static_cast<Index>(greeks.size());
  const IndexSet& J = law.others;
  const Index mj = static_cast<Index>(J.size());
  const Matrix& e = law.cond_cov;
  const Vector& h = law.stacked;

  ConditionalMoments cm;
  cm.others = J;
  cm.h = h;
  cm.g.resize(n);
  Matrix b(mj, n + mj);
  std::vector<Matrix> eg(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const GreekSet& gs = greeks[static_cast<std::size_t>(i)];
    const Matrix g_jj = take(gs.gamma, J, J);
    eg[static_cast<std::size_t>(i)] = e * g_jj;
    cm.g(i) = 0.5 * h.dot(gs.gamma * h) + 0.5 * eg[static_cast<std::size_t>(i)].trace() +
              gs.delta.dot(h) + gs.theta * model.dt();
    const Vector gh = gs.gamma * h;
    b.col(i) = take(gh, J) + take(gs.delta, J);
  }
  b.rightCols(mj).setIdentity();
  cm.R = linalg::symmetrize(b.transpose() * e * b);
  cm.S.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      cm.S(i, j) = cm.S(j, i) =
          (eg[static_cast<std::size_t>(i)] * eg[static_cast<std::size_t>(j)]).trace();
  return cm;
}

inline ConditionalMoments conditional_moments(const MarketModel& model, const DistressEvent& event,
                                              const std::vector<GreekSet>& greeks,
                                              const Portfolio& pf) {
  detail::check_portfolio(pf, model.size(), greeks.size());
  ConditionalMoments cm = conditional_moment_components(model, conditional_law(model, event), greeks);
  cm.evaluate(pf.x.size() ? pf.x : Vector::Zero(0), pf.y);
  return cm;
}

inline UnconditionalMoments unconditional_moment_components(const MarketModel& model,
                                                            const std::vector<GreekSet>& greeks) {
  const Index m = model.size();
  detail::check_greeks(greeks, m);
  const Index n = static_cast<Index>(greeks.size());
  const Matrix& sigma = model.sigma();
  const Vector& mu = model.mu();

  UnconditionalMoments um;
  um.mu = mu;
  um.eta.resize(n);
  Matrix b(m, n + m);
  std::vector<Matrix> sg(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const GreekSet& gs = greeks[static_cast<std::size_t>(i)];
    sg[static_cast<std::size_t>(i)] = sigma * gs.gamma;
    um.eta(i) = 0.5 * mu.dot(gs.gamma * mu) + 0.5 * sg[static_cast<std::size_t>(i)].trace() +
                gs.delta.dot(mu) + gs.theta * model.dt();
    b.col(i) = gs.gamma * mu + gs.delta;
  }
  b.rightCols(m).setIdentity();
  um.Psi = linalg::symmetrize(b.transpose() * sigma * b);
  um.Phi.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      um.Phi(i, j) = um.Phi(j, i) =
          (sg[static_cast<std::size_t>(i)] * sg[static_cast<std::size_t>(j)]).trace();
  return um;
}

inline UnconditionalMoments unconditional_moments(const MarketModel& model,
                                                  const std::vector<GreekSet>& greeks,
                                                  const Portfolio& pf) {
  detail::check_portfolio(pf, model.size(), greeks.size());
  UnconditionalMoments um = unconditional_moment_components(model, greeks);
  um.evaluate(pf.x.size() ? pf.x : Vector::Zero(0), pf.y);
  return um;
}

inline double covar_normal_approx(double mean, double variance, double q_conf) {
  require(variance >= 0.0, "covar_normal_approx: variance must be nonnegative");
  require(q_conf >= 0.5 && q_conf < 1.0, "covar_normal_approx: confidence must lie in [0.5,1)");
  return normal_quantile(q_conf) * std::sqrt(variance) - mean;
}

inline double covar_normal_approx(const ConditionalMoments& cm, double q_conf) {
  return covar_normal_approx(cm.mean, cm.variance, q_conf);
}

/// Largest CoVaR over all conditional laws with the given mean and variance.
inline double covar_worst_case(double mean, double variance, double q_conf) {
  require(variance >= 0.0, "covar_worst_case: variance must be nonnegative");
  return worst_case_multiplier(q_conf) * std::sqrt(variance) - mean;
}

inline double covar_worst_case(const ConditionalMoments& cm, double q_conf) {
  return covar_worst_case(cm.mean, cm.variance, q_conf);
}

// ---------------------------------------------------------------------------
// Spectral form of the conditional value change

inline constexpr double kZeroEigen = 1e-10;

/// dv | event = tau + sum_{l != 0} l_i (q_i + iota_i / l_i)^2 / 2
///            + sum_{l == 0} iota_i q_i,   q ~ N(nu, I).
struct QuadFormSpectral {
  Vector lambda;
  Vector iota;
  Vector nu;
  double c0 = 0.0;
  double tau = 0.0;

  bool is_zero(Index i) const { return std::abs(lambda(i)) <= kZeroEigen; }

  double mean() const {
    double m = tau;
    for (Index i = 0; i < lambda.size(); ++i) {
      if (is_zero(i)) {
        m += iota(i) * nu(i);
      } else {
        const double a = nu(i) + iota(i) / lambda(i);
        m += 0.5 * lambda(i) * (1.0 + a * a);
      }
    }
    return m;
  }

  double variance() const {
    double v = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) {
      if (is_zero(i)) {
        v += iota(i) * iota(i);
      } else {
        const double a = nu(i) + iota(i) / lambda(i);
        v += 0.5 * lambda(i) * lambda(i) * (1.0 + 2.0 * a * a);
      }
    }
    return v;
  }

  /// Value change at a draw of q.
  double value(const Vector& q) const {
    double v = tau;
    for (Index i = 0; i < lambda.size(); ++i) {
      if (is_zero(i)) {
        v += iota(i) * q(i);
      } else {
        const double z = q(i) + iota(i) / lambda(i);
        v += 0.5 * lambda(i) * z * z;
      }
    }
    return v;
  }

  /// Size of the largest term relative to the total spread; small values
  /// indicate the sum is close to normal. Advisory only.
  double dominance_ratio() const {
    double denom = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) denom += lambda(i) * lambda(i) * (0.5 + nu(i) * nu(i));
    if (denom <= 0.0) return 0.0;
    return lambda.cwiseAbs().maxCoeff() / std::sqrt(denom);
  }
};

inline QuadFormSpectral spectral_reform(const MarketModel& model, const ConditionalLaw& law,
                                        const std::vector<GreekSet>& greeks, const Portfolio& pf) {
  const Index m = model.size();
  detail::check_greeks(greeks, m);
  detail::check_portfolio(pf, m, greeks.size());
  Vector delta = pf.y;
  Matrix gamma = Matrix::Zero(m, m);
  double theta = 0.0;
  for (std::size_t i = 0; i < greeks.size(); ++i) {
    const double w = pf.x(static_cast<Index>(i));
    delta += w * greeks[i].delta;
    gamma += w * greeks[i].gamma;
    theta += w * greeks[i].theta;
  }
  const IndexSet& I = law.distressed;
  const IndexSet& J = law.others;
  const Vector& k = law.losses;
  const Matrix g_jj = take(gamma, J, J);
  const Matrix g_ji = take(gamma, J, I);
  const Matrix g_ii = take(gamma, I, I);
  const Vector s = take(delta, J) - g_ji * k;

  QuadFormSpectral qf;
  qf.c0 = theta * model.dt() - take(delta, I).dot(k) + 0.5 * k.dot(g_ii * k);
  if (J.empty()) {
    qf.tau = qf.c0;
    return qf;
  }
  const Matrix e_half = linalg::psd_sqrt(law.cond_cov);
  const Matrix e_pinv_half = linalg::psd_pinv_sqrt(law.cond_cov);
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(e_half * g_jj * e_half));
  const Matrix& d = es.eigenvectors();
  qf.lambda = es.eigenvalues();
  qf.iota = d.transpose() * e_half * s;
  qf.nu = d.transpose() * e_pinv_half * law.cond_mean;
  qf.tau = qf.c0;
  for (Index i = 0; i < qf.lambda.size(); ++i)
    if (!qf.is_zero(i)) qf.tau -= 0.5 * qf.iota(i) * qf.iota(i) / qf.lambda(i);
  return qf;
}

inline QuadFormSpectral spectral_reform(const MarketModel& model, const DistressEvent& event,
                                        const std::vector<GreekSet>& greeks, const Portfolio& pf) {
  return spectral_reform(model, conditional_law(model, event), greeks, pf);
}

// ---------------------------------------------------------------------------
// Monte Carlo CoVaR

struct QuantileEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline constexpr int kMinOraclePaths = 10000;

/// Empirical q-quantile of a loss sample with a binomial standard error:
/// half the spread between the order statistics n q -/+ sqrt(n q (1-q)).
inline QuantileEstimate empirical_quantile(std::vector<double> losses, double q) {
  require_dims(!losses.empty(), "empirical_quantile: empty sample");
  std::sort(losses.begin(), losses.end());
  const double n = static_cast<double>(losses.size());
  auto at = [&](double pos) {
    const auto idx = static_cast<std::size_t>(std::clamp(std::ceil(pos) - 1.0, 0.0, n - 1.0));
    return losses[idx];
  };
  const double half = std::sqrt(n * q * (1.0 - q));
  QuantileEstimate est;
  est.value = at(n * q);
  est.std_error = 0.5 * (at(n * q + half) - at(n * q - half));
  return est;
}

/// q-quantile of -dv with q ~ N(nu, I) drawn from the spectral form.
inline QuantileEstimate covar_mc_oracle(const QuadFormSpectral& qf, double q_conf, int paths,
                                        std::uint64_t seed) {
  require(paths >= kMinOraclePaths, "covar_mc_oracle: need at least 1e4 paths");
  require(q_conf > 0.0 && q_conf < 1.0, "covar_mc_oracle: confidence must lie in (0,1)");
  const Index dim = qf.lambda.size();
  std::vector<double> losses(static_cast<std::size_t>(paths));
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (losses.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng(mix_seed(seed, b));
    std::normal_distribution<double> gauss;
    Vector q(dim);
    for (std::size_t p = b * kBlock; p < std::min(losses.size(), (b + 1) * kBlock); ++p) {
      for (Index i = 0; i < dim; ++i) q(i) = qf.nu(i) + gauss(rng);
      losses[p] = -qf.value(q);
    }
  });
  return empirical_quantile(std::move(losses), q_conf);
}

/// Same quantile, drawing dp_J directly from the conditional law and
/// revaluing with the Delta-Gamma expansion.
inline QuantileEstimate covar_mc_oracle(const MarketModel& model, const ConditionalLaw& law,
                                        const std::vector<GreekSet>& greeks, const Portfolio& pf,
                                        double q_conf, int paths, std::uint64_t seed) {
  require(paths >= kMinOraclePaths, "covar_mc_oracle: need at least 1e4 paths");
  const Index m = model.size();
  detail::check_greeks(greeks, m);
  detail::check_portfolio(pf, m, greeks.size());
  const IndexSet& J = law.others;
  const Index mj = static_cast<Index>(J.size());
  const Matrix f = linalg::psd_sqrt(law.cond_cov);
  std::vector<double> losses(static_cast<std::size_t>(paths));
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (losses.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng(mix_seed(seed, b));
    std::normal_distribution<double> gauss;
    Vector z(mj);
    Vector dp = law.stacked;
    for (std::size_t p = b * kBlock; p < std::min(losses.size(), (b + 1) * kBlock); ++p) {
      for (Index i = 0; i < mj; ++i) z(i) = gauss(rng);
      const Vector dj = law.cond_mean + f * z;
      for (Index a = 0; a < mj; ++a) dp(J[static_cast<std::size_t>(a)]) = dj(a);
      double v = pf.y.dot(dp);
      for (std::size_t i = 0; i < greeks.size(); ++i)
        v += pf.x(static_cast<Index>(i)) * (greeks[i].theta * model.dt() + greeks[i].delta.dot(dp) +
                                            0.5 * dp.dot(greeks[i].gamma * dp));
      losses[p] = -v;
    }
  });
  return empirical_quantile(std::move(losses), q_conf);
}

// ---------------------------------------------------------------------------
// Optioned-asset covariance

/// Covariance of the Delta-Gamma value changes of two single-underlying
/// optioned assets when dp ~ N(mean, cov). For i == j this is the variance.
inline double optioned_asset_covariance(const OptionedAsset& a, const OptionedAsset& b,
                                        const Vector& mean, const Matrix& cov) {
  const Index i = a.stock, j = b.stock;
  require_dims(i >= 0 && i < mean.size() && j >= 0 && j < mean.size(),
               "optioned_asset_covariance: stock index out of range");
  const double sij = cov(i, j);
  return (a.delta + a.gamma * mean(i)) * (b.delta + b.gamma * mean(j)) * sij +
         0.5 * a.gamma * b.gamma * sij * sij;
}

inline double optioned_asset_covariance(const OptionedAsset& a, const OptionedAsset& b,
                                        const MarketModel& model) {
  return optioned_asset_covariance(a, b, model.mu(), model.sigma());
}

/// Conditional variant: the law of dp given the event, with distressed
/// stocks pinned (zero variance).
inline Matrix embedded_cond_cov(const ConditionalLaw& law, Index universe) {
  Matrix out = Matrix::Zero(universe, universe);
  for (std::size_t a = 0; a < law.others.size(); ++a)
    for (std::size_t b = 0; b < law.others.size(); ++b)
      out(law.others[a], law.others[b]) = law.cond_cov(static_cast<Index>(a), static_cast<Index>(b));
  return out;
}

inline double optioned_asset_covariance(const OptionedAsset& a, const OptionedAsset& b,
                                        const ConditionalLaw& law) {
  const Index m = static_cast<Index>(law.others.size() + law.distressed.size());
  return optioned_asset_covariance(a, b, law.stacked, embedded_cond_cov(law, m));
}

/// Correlation of two optioned assets; 0 when either is riskless (variance
/// below 1e-12 of the underlying's variance).
inline double optioned_asset_correlation(const OptionedAsset& a, const OptionedAsset& b,
                                         const Vector& mean, const Matrix& cov) {
  const double va = optioned_asset_covariance(a, a, mean, cov);
  const double vb = optioned_asset_covariance(b, b, mean, cov);
  if (va <= 1e-12 * cov(a.stock, a.stock) || vb <= 1e-12 * cov(b.stock, b.stock)) return 0.0;
  return optioned_asset_covariance(a, b, mean, cov) / std::sqrt(va * vb);
}

}  // namespace covaropt
