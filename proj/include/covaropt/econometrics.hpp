#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/optim.hpp"

namespace covaropt {

/// GJR-GARCH(1,1) marginal with a variance-in-mean premium:
///   r_t = r dt + kappa sqrt(s_t) - s_t / 2 + e_t,   e_t ~ N(0, s_t)
///   s_t = a0 + a1 e_{t-1}^2 + a2 e_{t-1}^2 1{e_{t-1} < 0} + a3 s_{t-1}
struct GjrGarch {
  double alpha0 = 1e-5;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
  double kappa = 0.0;

  /// Persistence under symmetric innovations.
  double persistence() const { return alpha1 + 0.5 * alpha2 + alpha3; }
  double unconditional_variance() const { return alpha0 / (1.0 - persistence()); }

  void validate() const {
    require(alpha0 > 0.0, "GjrGarch: alpha0 must be positive");
    require(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha3 >= 0.0,
            "GjrGarch: alpha1..alpha3 must be nonnegative");
    require(persistence() < 1.0, "GjrGarch: alpha1 + alpha2/2 + alpha3 must be < 1");
  }

  /// s_{t+1} given the innovation e_t and variance s_t.
  double next_variance(double eps, double var) const {
    const double e2 = eps * eps;
    return alpha0 + alpha1 * e2 + (eps < 0.0 ? alpha2 * e2 : 0.0) + alpha3 * var;
  }
};

/// Per-stock GJR marginals plus the annual risk-free rate; one period is a
/// week.
struct GarchSpec {
  std::vector<GjrGarch> stocks;
  double rate = 0.05;
  double period = kWeek;

  Index size() const { return static_cast<Index>(stocks.size()); }
  void validate() const {
    require_dims(!stocks.empty(), "GarchSpec: no stocks");
    require(period > 0.0, "GarchSpec: period must be positive");
    for (const auto& s : stocks) s.validate();
  }
};

/// Which innovations drive the DCC outer product. `raw` uses e_t exactly as
/// the recursion is usually written down in the option-pricing setup;
/// `standardized` uses e_t / sqrt(s_t) as in conventional DCC.
enum class DccInnovation { raw, standardized };

struct DccSpec {
  double beta1 = 0.0;
  double beta2 = 0.0;
  Matrix uncond_corr;
  DccInnovation innovation = DccInnovation::raw;

  Index size() const { return uncond_corr.rows(); }
  void validate() const {
    require(beta1 >= 0.0 && beta2 >= 0.0, "DccSpec: betas must be nonnegative");
    require(beta1 + beta2 < 1.0, "DccSpec: beta1 + beta2 must be < 1");
    require(linalg::is_symmetric(uncond_corr, 1e-10), "DccSpec: C must be symmetric");
    require((uncond_corr.diagonal().array() - 1.0).abs().maxCoeff() < 1e-10,
            "DccSpec: C must have unit diagonal");
    require(linalg::min_eigenvalue(uncond_corr) > -1e-10, "DccSpec: C must be PSD");
  }

  Matrix next_d(const Matrix& d_prev, const Vector& innov) const {
    return uncond_corr * (1.0 - beta1 - beta2) + beta1 * innov * innov.transpose() + beta2 * d_prev;
  }
};

/// C_t = diag(D_t)^{-1/2} D_t diag(D_t)^{-1/2}.
inline Matrix dcc_normalize(const Matrix& d) {
  const Vector inv = d.diagonal().cwiseSqrt().cwiseInverse();
  Matrix c = inv.asDiagonal() * d * inv.asDiagonal();
  c.diagonal().setOnes();
  return linalg::symmetrize(c);
}

/// Filter state at the end of the observed sample.
struct MarketState {
  Vector eps;  ///< last physical innovations e_t
  Vector var;  ///< last conditional variances s_t
  Matrix d;    ///< last DCC quasi-correlation D_t
};

// ---------------------------------------------------------------------------
// GJR estimation

struct GjrFit {
  GjrGarch params;
  double loglik = 0.0;
  Vector std_errors;  ///< (alpha0, alpha1, alpha2, alpha3, kappa)
  Vector variances;   ///< filtered s_t
  Vector residuals;   ///< e_t
  bool converged = false;
  int iterations = 0;
  std::string message;
};

namespace detail {

/// Gaussian log-likelihood of the GJR mean/variance equations; s_1 is the
/// sample variance.
inline double gjr_loglik(const GjrGarch& g, const Vector& ret, double rate_per_period,
                         Vector* var_out = nullptr, Vector* eps_out = nullptr) {
  const Index n = ret.size();
  const double mean = ret.mean();
  double var = (ret.array() - mean).square().sum() / static_cast<double>(n - 1);
  double ll = 0.0;
  if (var_out) var_out->resize(n);
  if (eps_out) eps_out->resize(n);
  for (Index t = 0; t < n; ++t) {
    if (!(var > 0.0) || !std::isfinite(var)) return -kInf;
    const double eps = ret(t) - rate_per_period - g.kappa * std::sqrt(var) + 0.5 * var;
    ll += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + eps * eps / var);
    if (var_out) (*var_out)(t) = var;
    if (eps_out) (*eps_out)(t) = eps;
    var = g.next_variance(eps, var);
  }
  return ll;
}

// Unconstrained parameterization: alpha0 = scale * exp(u0), persistence
// P = logistic(u1), (alpha1, alpha2/2, alpha3) = P * softmax(u2, u3, 0),
// kappa = u4.
inline GjrGarch gjr_from_free(const Vector& u, double scale) {
  GjrGarch g;
  g.alpha0 = scale * std::exp(u(0));
  const double p = optim::logistic(u(1));
  const double e2 = std::exp(u(2)), e3 = std::exp(u(3));
  const double z = e2 + e3 + 1.0;
  g.alpha1 = p * e2 / z;
  g.alpha2 = 2.0 * p * e3 / z;
  g.alpha3 = p / z;
  g.kappa = u(4);
  return g;
}

inline Vector gjr_to_free(const GjrGarch& g, double scale) {
  Vector u(5);
  const double p = std::clamp(g.persistence(), 1e-6, 1.0 - 1e-6);
  const double w1 = std::max(g.alpha1, 1e-8 * p), w2 = std::max(0.5 * g.alpha2, 1e-8 * p),
               w3 = std::max(g.alpha3, 1e-8 * p);
  u(0) = std::log(g.alpha0 / scale);
  u(1) = optim::logit(p);
  u(2) = std::log(w1 / w3);
  u(3) = std::log(w2 / w3);
  u(4) = g.kappa;
  return u;
}

}  // namespace detail

/// Maximum-likelihood GJR fit to a return series (log returns per period).
inline GjrFit fit_gjr(const Vector& returns, double annual_rate, double period = kWeek) {
  require_dims(returns.size() >= 200, "fit_gjr: need at least 200 observations");
  const double rpp = annual_rate * period;
  const double mean = returns.mean();
  const double sample_var = (returns.array() - mean).square().sum() / (returns.size() - 1.0);
  require(sample_var > 0.0, "fit_gjr: zero sample variance");

  auto nll_free = [&](const Vector& u) {
    return -detail::gjr_loglik(detail::gjr_from_free(u, sample_var), returns, rpp);
  };

  // Multi-start over persistence; keep the best optimum.
  GjrFit best;
  best.loglik = -kInf;
  const double starts[][4] = {{0.05, 0.05, 0.10, 0.85}, {0.20, 0.10, 0.10, 0.60}, {0.90, 0.02, 0.02, 0.05}};
  for (const auto& s : starts) {
    GjrGarch g0;
    g0.alpha0 = s[0] * sample_var;
    g0.alpha1 = s[1];
    g0.alpha2 = s[2];
    g0.alpha3 = s[3];
    g0.kappa = 0.0;
    auto res = optim::bfgs(nll_free, detail::gjr_to_free(g0, sample_var), 800, 1e-7);
    const double ll = -res.value;
    if (ll > best.loglik) {
      best.params = detail::gjr_from_free(res.x, sample_var);
      best.loglik = ll;
      best.converged = res.converged;
      best.iterations = res.iterations;
      best.message = res.message;
    }
  }

  detail::gjr_loglik(best.params, returns, rpp, &best.variances, &best.residuals);

  auto nll_natural = [&](const Vector& th) {
    GjrGarch g{th(0), th(1), th(2), th(3), th(4)};
    if (g.alpha0 <= 0.0) return kInf;
    return -detail::gjr_loglik(g, returns, rpp);
  };
  Vector theta(5);
  theta << best.params.alpha0, best.params.alpha1, best.params.alpha2, best.params.alpha3,
      best.params.kappa;
  const Matrix hess = optim::numeric_hessian(nll_natural, theta);
  best.std_errors = Vector::Constant(5, std::numeric_limits<double>::quiet_NaN());
  Eigen::FullPivLU<Matrix> lu(hess);
  if (lu.isInvertible()) {
    const Matrix cov = lu.inverse();
    for (Index i = 0; i < 5; ++i)
      if (cov(i, i) > 0.0) best.std_errors(i) = std::sqrt(cov(i, i));
  }
  return best;
}

// ---------------------------------------------------------------------------
// DCC estimation

/// Quasi-correlation path D_t and correlation path C_t for an innovation
/// panel (rows = time). D_1 = C.
inline std::vector<Matrix> dcc_correlation_path(const DccSpec& spec, const Matrix& innovations) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(innovations.rows()));
  Matrix d = spec.uncond_corr;
  for (Index t = 0; t < innovations.rows(); ++t) {
    out.push_back(dcc_normalize(d));
    d = spec.next_d(d, innovations.row(t).transpose());
  }
  return out;
}

struct DccFit {
  DccSpec spec;
  double loglik = 0.0;
  Vector std_errors;  ///< (beta1, beta2)
  bool converged = false;
  std::string message;
};

namespace detail {
inline double dcc_loglik(const DccSpec& spec, const Matrix& z, const Matrix& innov) {
  Matrix d = spec.uncond_corr;
  double ll = 0.0;
  for (Index t = 0; t < z.rows(); ++t) {
    const Matrix c = dcc_normalize(d);
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) return -kInf;
    const Vector zt = z.row(t).transpose();
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    ll += -0.5 * (logdet + zt.dot(llt.solve(zt)) - zt.squaredNorm());
    d = spec.next_d(d, innov.row(t).transpose());
  }
  return ll;
}
}  // namespace detail

/// Second-stage DCC quasi-MLE. `z` holds standardized residuals; `scales`
/// (same shape, sqrt of conditional variances) is needed only for the raw
/// variant, whose outer products use e_t = z_t * scale_t.
inline DccFit fit_dcc(const Matrix& z, DccInnovation variant = DccInnovation::raw,
                      const Matrix* scales = nullptr) {
  require_dims(z.rows() > z.cols() + 10, "fit_dcc: panel too short");
  Matrix innov = z;
  if (variant == DccInnovation::raw) {
    if (scales) {
      require_dims(scales->rows() == z.rows() && scales->cols() == z.cols(),
                   "fit_dcc: scales must match the residual panel");
      innov = z.cwiseProduct(*scales);
    }
  }
  const Vector mean = z.colwise().mean().transpose();
  const Matrix centered = z.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(z.rows() - 1);

  DccFit fit;
  fit.spec.uncond_corr = linalg::cov_to_corr(cov);
  fit.spec.innovation = variant;

  auto make = [&](const Vector& u) {
    DccSpec s = fit.spec;
    const double total = optim::logistic(u(0));
    const double share = optim::logistic(u(1));
    s.beta1 = total * share;
    s.beta2 = total * (1.0 - share);
    return s;
  };
  auto nll = [&](const Vector& u) { return -detail::dcc_loglik(make(u), z, innov); };

  double best = kInf;
  Vector best_u;
  optim::MinimizeResult best_res;
  for (double total : {0.5, 0.95}) {
    Vector u0(2);
    u0 << optim::logit(total), optim::logit(0.1);
    auto res = optim::bfgs(nll, u0, 300, 1e-7);
    if (res.value < best) {
      best = res.value;
      best_u = res.x;
      best_res = res;
    }
  }
  fit.spec = make(best_u);
  fit.loglik = -best;
  fit.converged = best_res.converged;
  fit.message = best_res.message;

  auto nll_natural = [&](const Vector& b) {
    if (b(0) < 0.0 || b(1) < 0.0 || b(0) + b(1) >= 1.0) return kInf;
    DccSpec s = fit.spec;
    s.beta1 = b(0);
    s.beta2 = b(1);
    return -detail::dcc_loglik(s, z, innov);
  };
  Vector b(2);
  b << fit.spec.beta1, fit.spec.beta2;
  fit.std_errors = Vector::Constant(2, std::numeric_limits<double>::quiet_NaN());
  if (b(0) > 1e-6 && b(1) > 1e-6) {
    const Matrix hess = optim::numeric_hessian(nll_natural, b);
    Eigen::FullPivLU<Matrix> lu(hess);
    if (lu.isInvertible()) {
      const Matrix cv = lu.inverse();
      for (Index i = 0; i < 2; ++i)
        if (cv(i, i) > 0.0) fit.std_errors(i) = std::sqrt(cv(i, i));
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Forecasting and simulation

/// Per-stock variance forecasts s_{t+1..t+steps} (rows = step). Beyond one
/// step, E[e^2 1{e<0}] = s/2.
inline Matrix forecast_variance(const GarchSpec& spec, const MarketState& state, int steps) {
  require(steps >= 1, "forecast_variance: steps must be >= 1");
  const Index m = spec.size();
  require_dims(state.eps.size() == m && state.var.size() == m, "forecast_variance: state size");
  Matrix out(steps, m);
  for (Index i = 0; i < m; ++i) {
    const auto& g = spec.stocks[static_cast<std::size_t>(i)];
    double s = g.next_variance(state.eps(i), state.var(i));
    out(0, i) = s;
    for (int h = 1; h < steps; ++h) {
      s = g.alpha0 + g.persistence() * s;
      out(h, i) = s;
    }
  }
  return out;
}

/// Risk-off flag: strictly more than half of the one-step forecasts exceed
/// the current variance estimates.
inline bool discretion_signal(const GarchSpec& spec, const MarketState& state,
                              const Vector& current_variance) {
  require_dims(current_variance.size() == spec.size(), "discretion_signal: size mismatch");
  const Matrix f = forecast_variance(spec, state, 1);
  Index higher = 0;
  for (Index i = 0; i < spec.size(); ++i)
    if (f(0, i) > current_variance(i)) ++higher;
  return 2 * higher > spec.size();
}

enum class Measure { physical, risk_neutral };

/// One simulated path: per-period log returns and conditional variances
/// (rows = period, cols = stock).
struct SimulatedPath {
  Matrix log_returns;
  Matrix variances;
};

/// Simulates joint GJR-DCC paths. Under the risk-neutral measure the shock
/// w_t ~ N(0, H_t C_t H_t) is e^Q_t, the physical innovation is
/// e_t = e^Q_t - kappa sqrt(s_t), and returns drop the premium term; both
/// recursions keep running on e_t. Path p draws from its own stream
/// mix_seed(seed, p).
inline std::vector<SimulatedPath> simulate_paths(const GarchSpec& spec, const DccSpec& dcc,
                                                 const MarketState& state, int horizon, int paths,
                                                 std::uint64_t seed, Measure measure) {
  spec.validate();
  const Index m = spec.size();
  require_dims(dcc.size() == m, "simulate_paths: DCC dimension mismatch");
  require_dims(state.eps.size() == m && state.var.size() == m && state.d.rows() == m,
               "simulate_paths: state dimension mismatch");
  require(horizon >= 1 && paths >= 1, "simulate_paths: horizon and paths must be positive");
  const double rpp = spec.rate * spec.period;
  std::vector<SimulatedPath> out(static_cast<std::size_t>(paths));
  parallel_for(static_cast<std::size_t>(paths), [&](std::size_t p) {
    std::mt19937_64 rng(mix_seed(seed, p));
    std::normal_distribution<double> gauss;
    SimulatedPath path{Matrix(horizon, m), Matrix(horizon, m)};
    Vector eps = state.eps;
    Vector var = state.var;
    Matrix d = state.d;
    Vector innov(m), z(m), sd(m);
    for (int t = 0; t < horizon; ++t) {
      for (Index i = 0; i < m; ++i) {
        innov(i) = dcc.innovation == DccInnovation::raw ? eps(i) : eps(i) / std::sqrt(var(i));
        var(i) = spec.stocks[static_cast<std::size_t>(i)].next_variance(eps(i), var(i));
        sd(i) = std::sqrt(var(i));
      }
      d = dcc.next_d(d, innov);
      const Matrix c = dcc_normalize(d);
      Eigen::LLT<Matrix> llt(c);
      for (Index i = 0; i < m; ++i) z(i) = gauss(rng);
      const Vector w = sd.asDiagonal() * (llt.matrixL() * z);
      for (Index i = 0; i < m; ++i) {
        const double kappa = spec.stocks[static_cast<std::size_t>(i)].kappa;
        double r;
        if (measure == Measure::physical) {
          eps(i) = w(i);
          r = rpp + kappa * sd(i) - 0.5 * var(i) + eps(i);
        } else {
          eps(i) = w(i) - kappa * sd(i);
          r = rpp - 0.5 * var(i) + w(i);
        }
        path.log_returns(t, i) = r;
        path.variances(t, i) = var(i);
      }
    }
    out[p] = std::move(path);
  });
  return out;
}

inline std::vector<SimulatedPath> simulate_risk_neutral(const GarchSpec& spec, const DccSpec& dcc,
                                                        const MarketState& state, int horizon,
                                                        int paths, std::uint64_t seed) {
  return simulate_paths(spec, dcc, state, horizon, paths, seed, Measure::risk_neutral);
}

/// Stationary starting state: unconditional variances, zero innovations,
/// D = C.
inline MarketState stationary_state(const GarchSpec& spec, const DccSpec& dcc) {
  MarketState s;
  const Index m = spec.size();
  s.eps = Vector::Zero(m);
  s.var.resize(m);
  for (Index i = 0; i < m; ++i) s.var(i) = spec.stocks[static_cast<std::size_t>(i)].unconditional_variance();
  s.d = dcc.uncond_corr;
  return s;
}

}  // namespace covaropt
