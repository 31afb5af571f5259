#pragma once

#include <cmath>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/normal.hpp"
#include "covaropt/risk.hpp"
#include "covaropt/socp.hpp"

namespace covaropt {

/// Lowest CoVaR reachable by a long-only unit-wealth stock portfolio splits
/// into the distressed part (bound_I) and the rest (bound_J); the CoVaR
/// target rho_bar is unreachable iff it is below both.
struct ControllabilityReport {
  double bound_i = kInf;
  double bound_j = kInf;
  Vector witness;  ///< r attaining bound_J, ||r|| <= 1
  SolveStatus status = SolveStatus::optimal;

  double min_covar() const { return std::min(bound_i, bound_j); }
  bool infeasible(double rho_bar) const { return rho_bar < bound_i && rho_bar < bound_j; }
};

inline ControllabilityReport controllability_bounds(const MarketModel& model, const DistressEvent& event,
                                          double q_conf, const SolverOptions& opt = {}) {
  require(q_conf >= 0.5 && q_conf < 1.0, "controllability_bounds: confidence must lie in [0.5,1)");
  const ConditionalLaw law = conditional_law(model, event);
  const Vector& p = model.prices();
  ControllabilityReport rep;
  for (std::size_t a = 0; a < law.distressed.size(); ++a)
    rep.bound_i = std::min(rep.bound_i, law.losses(static_cast<Index>(a)) / p(law.distressed[a]));

  const Index mj = static_cast<Index>(law.others.size());
  if (mj == 0) return rep;
  const Matrix f = linalg::psd_factor(law.cond_cov);
  const double alpha = normal_quantile(q_conf);

  // maximize t  s.t.  t p_j - alpha F_j' r <= -c_j,  ||r|| <= 1.
  ConeProgram prog(mj + 1);
  prog.objective(mj) = 1.0;
  for (Index a = 0; a < mj; ++a) {
    Vector row = Vector::Zero(mj + 1);
    row.head(mj) = -alpha * f.col(a);
    row(mj) = p(law.others[static_cast<std::size_t>(a)]);
    prog.add_le(row, -law.cond_mean(a));
  }
  SocBlock ball;
  ball.name = "unit_ball";
  ball.head_coef = Vector::Zero(mj + 1);
  ball.head_const = 1.0;
  ball.tail_coef = Matrix::Zero(mj, mj + 1);
  ball.tail_coef.leftCols(mj).setIdentity();
  ball.tail_const = Vector::Zero(mj);
  prog.add_cone(std::move(ball));

  const Solution sol = solve(prog, opt);
  rep.status = sol.status;
  if (!sol.optimal()) throw std::runtime_error("controllability_bounds: bound_J solve failed");
  rep.witness = sol.x.head(mj);
  rep.bound_j = sol.objective;
  return rep;
}

// ---------------------------------------------------------------------------
// Two-stock diagnostics

struct SeesawCoefficients {
  double slope1 = 0.0;  ///< d CoVaR(event on stock 1) / d w
  double slope2 = 0.0;  ///< d CoVaR(event on stock 2) / d w
  bool seesaw = false;  ///< slopes of opposite sign
};

/// With value weight w in stock 1 and 1 - w in stock 2, both CoVaRs are
/// linear in w; their slopes are the CoVaR differences between the two
/// pure portfolios.
inline SeesawCoefficients seesaw_coefficients(const MarketModel& model, double p_conf, double q_conf) {
  require_dims(model.size() == 2, "seesaw_coefficients: two-stock model required");
  const Vector& p = model.prices();
  const Vector only1 = Vector(Vector::Unit(2, 0)) / p(0);
  const Vector only2 = Vector(Vector::Unit(2, 1)) / p(1);
  const auto law1 = conditional_law(model, DistressEvent::at_var(model, {0}, p_conf));
  const auto law2 = conditional_law(model, DistressEvent::at_var(model, {1}, p_conf));
  SeesawCoefficients out;
  out.slope1 = stock_covar(law1, only1, q_conf) - stock_covar(law1, only2, q_conf);
  out.slope2 = stock_covar(law2, only1, q_conf) - stock_covar(law2, only2, q_conf);
  out.seesaw = out.slope1 * out.slope2 < 0.0;
  return out;
}

inline constexpr int kDefaultGridPoints = 51;

struct ContagionPoint {
  double rho = 0.0;
  double loss = 0.0;
  double covar = 0.0;
};

/// CoVaR of the equal-weight two-stock portfolio (zero means, common
/// variance sigma) when stock 1 loses `loss`, on a (rho, loss) grid.
inline std::vector<ContagionPoint> contagion_surface(const std::vector<double>& rhos,
                                                     const std::vector<double>& losses, double q_conf,
                                                     double sigma = 0.01) {
  require(sigma > 0.0, "contagion_surface: variance must be positive");
  const double aq = normal_quantile(q_conf);
  std::vector<ContagionPoint> out;
  out.reserve(rhos.size() * losses.size());
  for (double rho : rhos) {
    require(std::abs(rho) <= 1.0, "contagion_surface: |rho| must be <= 1");
    for (double loss : losses) {
      const double cond_sd = std::sqrt(sigma * std::max(0.0, 1.0 - rho * rho));
      out.push_back({rho, loss, 0.5 * (aq * cond_sd + rho * loss) + 0.5 * loss});
    }
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  require(n >= 2, "linspace: need at least two points");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace covaropt
