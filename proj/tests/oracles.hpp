#pragma once

// Reference computations for tests. Each one takes a different route from
// the library implementation it checks.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "covaropt/covaropt.hpp"

namespace oracle {

using covaropt::Index;
using covaropt::IndexSet;
using covaropt::Matrix;
using covaropt::Vector;

/// Gaussian conditioning through the precision matrix: given x_I, the law
/// of x_J has covariance Lambda_JJ^{-1} and mean mu_J - Lambda_JJ^{-1}
/// Lambda_JI (x_I - mu_I).
struct Conditional {
  Vector mean;
  Matrix cov;
};

inline Conditional condition_by_precision(const Vector& mu, const Matrix& sigma, const IndexSet& I,
                                          const Vector& x_i) {
  const Matrix lam = sigma.inverse();
  const IndexSet J = covaropt::complement(I, mu.size());
  const Matrix l_jj = covaropt::take(lam, J, J);
  const Matrix l_ji = covaropt::take(lam, J, I);
  const Matrix l_jj_inv = l_jj.inverse();
  Conditional c;
  c.cov = 0.5 * (l_jj_inv + l_jj_inv.transpose());
  c.mean = covaropt::take(mu, J) - l_jj_inv * l_ji * (x_i - covaropt::take(mu, I));
  return c;
}

/// q-quantile by selection plus the binomial standard error from order
/// statistics at n q +- sqrt(n q (1 - q)).
struct Quantile {
  double value;
  double se;
};

inline Quantile order_stat_quantile(std::vector<double> x, double q) {
  const auto n = static_cast<double>(x.size());
  auto kth = [&](double pos) {
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, n - 1.0));
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end());
    return x[k];
  };
  const double half = std::sqrt(n * q * (1.0 - q));
  const double value = kth(n * q);
  const double hi = kth(n * q + half);
  const double lo = kth(n * q - half);
  return {value, 0.5 * (hi - lo)};
}

/// Normal quantile by bisection on the long-double erfc.
inline double normal_quantile_bisect(double p) {
  long double lo = -40.0L, hi = 40.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double cdf = 0.5L * std::erfc(-mid / std::sqrt(2.0L));
    (cdf < p ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

/// European price as the discounted integral of the payoff against the
/// lognormal density, by Simpson's rule in log-spot over the in-the-money
/// side of log K so the payoff kink sits on an endpoint.
inline double bs_integral(double spot, double strike, double vol, double rate, double expiry, bool call) {
  const double m = std::log(spot) + (rate - 0.5 * vol * vol) * expiry;
  const double s = vol * std::sqrt(expiry);
  const double lk = std::log(strike);
  const double a = call ? lk : m - 14.0 * s;
  const double b = call ? m + 14.0 * s : lk;
  if (b <= a) return 0.0;
  const int n = 20000;
  const double h = (b - a) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = a + i * h;
    const double st = std::exp(z);
    const double pay = call ? st - strike : strike - st;
    const double dens = std::exp(-0.5 * (z - m) * (z - m) / (s * s)) / (s * std::sqrt(2.0 * M_PI));
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * pay * dens;
  }
  return std::exp(-rate * expiry) * acc * h / 3.0;
}

/// Random covariance with correlation from normalized Gaussian rows and
/// standard deviations in [sd_lo, sd_hi].
inline Matrix random_covariance(Index m, std::mt19937_64& rng, double sd_lo = 0.01, double sd_hi = 0.05) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(sd_lo, sd_hi);
  Matrix a(m, m + 2);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m + 2; ++j) a(i, j) = g(rng);
  Matrix c = a * a.transpose();
  const Vector d = c.diagonal().cwiseSqrt().cwiseInverse();
  c = d.asDiagonal() * c * d.asDiagonal();
  Vector sd(m);
  for (Index i = 0; i < m; ++i) sd(i) = u(rng);
  return sd.asDiagonal() * c * sd.asDiagonal();
}

/// Random model with prices in [0.5, 2] and small means.
inline covaropt::MarketModel random_model(Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Matrix cov01 = random_covariance(m, rng);
  Vector p(m), mu(m);
  for (Index i = 0; i < m; ++i) {
    p(i) = 0.5 + 1.5 * u(rng);
    mu(i) = (u(rng) - 0.3) * 0.01 * p(i);
  }
  // Scale returns covariance to price changes.
  const Matrix cov = p.asDiagonal() * cov01 * p.asDiagonal();
  return covaropt::MarketModel(p, mu, cov, covaropt::kWeek);
}

/// Random nonempty proper subset of {0..m-1}, sorted.
inline IndexSet random_subset(Index m, std::mt19937_64& rng) {
  std::vector<Index> all(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  const auto k = std::uniform_int_distribution<Index>(1, m - 1)(rng);
  IndexSet s(all.begin(), all.begin() + k);
  std::sort(s.begin(), s.end());
  return s;
}

/// Gaussian CoVaR written out from the precision-matrix conditional law.
inline double covar_closed_form(const covaropt::MarketModel& model, const covaropt::DistressEvent& ev,
                                const Vector& y, double q) {
  const Conditional c = condition_by_precision(model.mu(), model.sigma(), ev.distressed(), -ev.losses());
  const IndexSet J = covaropt::complement(ev.distressed(), model.size());
  const Vector yj = covaropt::take(y, J);
  return normal_quantile_bisect(q) * std::sqrt(yj.dot(c.cov * yj)) - c.mean.dot(yj) +
         ev.losses().dot(covaropt::take(y, ev.distressed()));
}

/// Maximizes mu'y over a 2-stock value grid v_i = p_i y_i in [0, u] with
/// step h, subject to the budget, a variance cap and per-event CoVaR caps
/// evaluated in closed form. Returns -inf when no grid point is feasible.
inline double grid_search_two_asset(const covaropt::MarketModel& model,
                                    const std::vector<covaropt::DistressEvent>& events,
                                    const Vector& rho_bar, double sigma_bar, double q, double u, double budget,
                                    double h) {
  const Vector& p = model.prices();
  const double aq = normal_quantile_bisect(q);
  struct Lin {
    double a0, a1, s00, s01, s11;
    int free_index;
  };
  std::vector<Lin> lins;
  for (const auto& ev : events) {
    const Index i = ev.distressed()[0];
    const Index j = 1 - i;
    const Conditional c = condition_by_precision(model.mu(), model.sigma(), {i}, -ev.losses());
    Lin l{};
    l.free_index = static_cast<int>(j);
    l.a0 = ev.losses()(0);    // coefficient on y_i
    l.a1 = -c.mean(0);        // coefficient on y_j (mean part)
    l.s11 = c.cov(0, 0);
    lins.push_back(l);
  }
  const int n = static_cast<int>(std::floor(u / h + 1e-9));
  double best = -covaropt::kInf;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const double v0 = a * h, v1 = b * h;
      if (v0 + v1 > budget + 1e-12) continue;
      Vector y(2);
      y << v0 / p(0), v1 / p(1);
      if (std::sqrt(y.dot(model.sigma() * y)) > sigma_bar) continue;
      bool ok = true;
      for (std::size_t e = 0; e < lins.size() && ok; ++e) {
        const Lin& l = lins[e];
        const double yj = y(l.free_index), yi = y(1 - l.free_index);
        const double cv = aq * std::sqrt(l.s11) * std::abs(yj) + l.a1 * yj + l.a0 * yi;
        ok = cv <= rho_bar(static_cast<Index>(e));
      }
      if (ok) best = std::max(best, model.mu().dot(y));
    }
  }
  return best;
}

}  // namespace oracle
