#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "covaropt/core.hpp"
#include "covaropt/linalg.hpp"
#include "covaropt/market_model.hpp"
#include "covaropt/normal.hpp"
#include "covaropt/risk.hpp"
#include "covaropt/socp.hpp"

namespace covaropt {

enum class RiskMode { normal, worst_case };

inline double risk_multiplier(RiskMode mode, double q_conf) {
  return mode == RiskMode::normal ? normal_quantile(q_conf) : worst_case_multiplier(q_conf);
}

/// Admissible set: trading budget with bid/ask costs on option trades and
/// notional bounds (currency) on each position.
struct Admissible {
  Vector x0;
  Vector y0;
  double k0 = 1.0;
  Vector l_d, u_d;  ///< bid x >= l_d, ask x <= u_d
  Vector l_p, u_p;  ///< l_p <= p y <= u_p
  std::optional<double> option_cap;  ///< sum of option notionals

  /// Fresh portfolio: no holdings, long-only bounds.
  static Admissible fresh(Index n_options, Index n_stocks, double k0, double u_stock, double u_option) {
    Admissible a;
    a.x0 = Vector::Zero(n_options);
    a.y0 = Vector::Zero(n_stocks);
    a.k0 = k0;
    a.l_d = Vector::Zero(n_options);
    a.u_d = Vector::Constant(n_options, u_option);
    a.l_p = Vector::Zero(n_stocks);
    a.u_p = Vector::Constant(n_stocks, u_stock);
    return a;
  }
};

struct P1Problem {
  MarketModel model;
  std::vector<GreekSet> greeks;  ///< per option
  Vector bid;
  Vector ask;
  std::vector<DistressEvent> events;
  Vector rho_bar;  ///< per event; +inf drops the constraint
  double sigma_bar = kInf;
  double q_conf = 0.95;
  RiskMode mode = RiskMode::normal;
  Admissible omega;
  std::optional<double> min_return;
};

enum class P1Objective { max_return, min_covar, min_std };

struct P1Solution {
  SolveStatus status = SolveStatus::max_iter;
  Vector x;
  Vector y;
  double expected_return = 0.0;
  double std_dev = 0.0;
  Vector covar;  ///< per event, under the problem's risk mode
  Solution raw;

  bool optimal() const { return status == SolveStatus::optimal; }
};

/// Caches the moment matrices and their factors for one problem so that
/// many (rho_bar, sigma_bar, objective) variants can be built cheaply.
class P1Builder {
 public:
  explicit P1Builder(P1Problem problem) : prob_(std::move(problem)) {
    const Index m = prob_.model.size();
    const Index n_all = static_cast<Index>(prob_.greeks.size());
    require(prob_.q_conf >= 0.5 && prob_.q_conf < 1.0, "build_p1: confidence must lie in [0.5,1)");
    require_dims(prob_.bid.size() == n_all && prob_.ask.size() == n_all, "build_p1: bid/ask size");
    require_dims(prob_.rho_bar.size() == static_cast<Index>(prob_.events.size()),
                 "build_p1: one rho_bar per event");
    const Admissible& om = prob_.omega;
    require_dims(om.x0.size() == n_all && om.l_d.size() == n_all && om.u_d.size() == n_all,
                 "build_p1: option bounds size");
    require_dims(om.y0.size() == m && om.l_p.size() == m && om.u_p.size() == m,
                 "build_p1: stock bounds size");
    for (Index i = 0; i < n_all; ++i) {
      require(prob_.ask(i) >= prob_.bid(i) && prob_.bid(i) >= 0.0, "build_p1: need ask >= bid >= 0");
      if (!(om.l_d(i) == 0.0 && om.u_d(i) == 0.0 && om.x0(i) == 0.0)) active_.push_back(i);
    }
    for (Index i = 0; i < m; ++i)
      require(om.l_p(i) <= om.u_p(i), "build_p1: inconsistent stock bounds");

    std::vector<GreekSet> g;
    for (Index i : active_) g.push_back(prob_.greeks[static_cast<std::size_t>(i)]);
    um_ = unconditional_moment_components(prob_.model, g);
    const Index n = static_cast<Index>(active_.size());
    const Matrix l = linalg::psd_factor(prob_.model.sigma());
    Matrix b(m, n + m);
    for (Index k = 0; k < n; ++k) b.col(k) = g[static_cast<std::size_t>(k)].gamma * prob_.model.mu() +
                                              g[static_cast<std::size_t>(k)].delta;
    b.rightCols(m).setIdentity();
    h_ = l * b;
    mfac_ = n > 0 ? linalg::psd_factor(um_.Phi) : Matrix(0, 0);
    for (const auto& ev : prob_.events) {
      const ConditionalLaw law = conditional_law(prob_.model, ev);
      EventData d;
      d.cm = conditional_moment_components(prob_.model, law, g);
      const Index mj = static_cast<Index>(law.others.size());
      Matrix bj(mj, n + mj);
      for (Index k = 0; k < n; ++k) {
        const Vector gh = g[static_cast<std::size_t>(k)].gamma * law.stacked;
        bj.col(k) = take(gh, law.others) + take(g[static_cast<std::size_t>(k)].delta, law.others);
      }
      bj.rightCols(mj).setIdentity();
      d.q = mj > 0 ? Matrix(linalg::psd_factor(law.cond_cov) * bj) : Matrix(0, n);
      d.nfac = n > 0 ? linalg::psd_factor(d.cm.S) : Matrix(0, 0);
      d.others = law.others;
      events_.push_back(std::move(d));
    }
  }

  const P1Problem& problem() const { return prob_; }
  const IndexSet& active_options() const { return active_; }
  Index num_active() const { return static_cast<Index>(active_.size()); }

  /// Variable layout: x (active options), y, theta, [notional a], [t].
  Index x_off() const { return 0; }
  Index y_off() const { return num_active(); }
  Index theta_off() const { return y_off() + prob_.model.size(); }
  Index cap_off() const { return theta_off() + num_active(); }

  ConeProgram build(P1Objective objective = P1Objective::max_return,
                    std::optional<Vector> rho_override = std::nullopt,
                    std::optional<double> sigma_override = std::nullopt) const {
    const Index m = prob_.model.size();
    const Index n = num_active();
    // Long-only option books need no notional variables for the cap.
    bool long_only = true;
    for (Index k = 0; k < n; ++k) {
      const Index i = active_[static_cast<std::size_t>(k)];
      long_only = long_only && prob_.bid(i) > 0.0 && prob_.omega.l_d(i) >= 0.0;
    }
    const bool cap = prob_.omega.option_cap.has_value() && n > 0 && !long_only;
    const Index nv = 2 * n + m + (cap ? n : 0) + (objective == P1Objective::max_return ? 0 : 1);
    const Index t_idx = nv - 1;
    const Vector rho = rho_override.value_or(prob_.rho_bar);
    const double sigma_bar = sigma_override.value_or(prob_.sigma_bar);
    require_dims(rho.size() == static_cast<Index>(events_.size()), "build_p1: one rho_bar per event");
    const Admissible& om = prob_.omega;
    const Vector& p = prob_.model.prices();

    ConeProgram prog(nv);
    if (objective == P1Objective::max_return) {
      prog.objective.segment(x_off(), n) = um_.eta;
      prog.objective.segment(y_off(), m) = prob_.model.mu();
    } else {
      prog.objective(t_idx) = -1.0;
    }

    // Variance cone.
    if (objective == P1Objective::min_std || std::isfinite(sigma_bar)) {
      SocBlock c;
      c.name = "variance";
      c.head_coef = Vector::Zero(nv);
      if (objective == P1Objective::min_std) c.head_coef(t_idx) = 1.0;
      else c.head_const = sigma_bar;
      c.tail_coef = Matrix::Zero(m + n, nv);
      c.tail_coef.block(0, x_off(), m, n) = h_.leftCols(n);
      c.tail_coef.block(0, y_off(), m, m) = h_.rightCols(m);
      if (n > 0) c.tail_coef.block(m, x_off(), n, n) = mfac_ / std::sqrt(2.0);
      c.tail_const = Vector::Zero(m + n);
      prog.add_cone(std::move(c));
    }

    // CoVaR cones.
    const double alpha = risk_multiplier(prob_.mode, prob_.q_conf);
    for (std::size_t e = 0; e < events_.size(); ++e) {
      const bool epigraph = objective == P1Objective::min_covar;
      if (!epigraph && !std::isfinite(rho(static_cast<Index>(e)))) continue;
      const EventData& d = events_[e];
      Vector head = Vector::Zero(nv);
      head.segment(x_off(), n) = d.cm.g;
      head.segment(y_off(), m) = d.cm.h;
      double head_const = 0.0;
      if (epigraph) head(t_idx) = 1.0;
      else head_const = rho(static_cast<Index>(e));
      if (alpha == 0.0) {
        prog.add_le(-head, head_const);
        continue;
      }
      const Index mj = static_cast<Index>(d.others.size());
      SocBlock c;
      c.name = "covar" + std::to_string(e);
      c.head_coef = head / alpha;
      c.head_const = head_const / alpha;
      c.tail_coef = Matrix::Zero(mj + n, nv);
      c.tail_coef.block(0, x_off(), mj, n) = d.q.leftCols(n);
      for (Index a = 0; a < mj; ++a)
        c.tail_coef.col(y_off() + d.others[static_cast<std::size_t>(a)]).head(mj) = d.q.col(n + a);
      if (n > 0) c.tail_coef.block(mj, x_off(), n, n) = d.nfac / std::sqrt(2.0);
      c.tail_const = Vector::Zero(mj + n);
      prog.add_cone(std::move(c));
    }

    // Budget: sum theta + p'(y - y0) <= k0, theta_i >= ask_i dx_i, theta_i >= bid_i dx_i.
    Vector row = Vector::Zero(nv);
    row.segment(theta_off(), n).setOnes();
    row.segment(y_off(), m) = p;
    prog.add_le(row, om.k0 + p.dot(om.y0));
    for (Index k = 0; k < n; ++k) {
      const Index i = active_[static_cast<std::size_t>(k)];
      for (double price : {prob_.ask(i), prob_.bid(i)}) {
        row.setZero();
        row(x_off() + k) = price;
        row(theta_off() + k) = -1.0;
        prog.add_le(row, price * om.x0(i));
      }
      // bid x >= l_d, ask x <= u_d.
      set_scaled_bound(prog, x_off() + k, prob_.bid(i), om.l_d(i), true);
      set_scaled_bound(prog, x_off() + k, prob_.ask(i), om.u_d(i), false);
    }
    for (Index i = 0; i < m; ++i) {
      prog.lower(y_off() + i) = om.l_p(i) / p(i);
      prog.upper(y_off() + i) = om.u_p(i) / p(i);
    }
    if (cap) {
      for (Index k = 0; k < n; ++k) {
        const Index i = active_[static_cast<std::size_t>(k)];
        row.setZero();
        row(x_off() + k) = prob_.ask(i);
        row(cap_off() + k) = -1.0;
        prog.add_le(row, 0.0);
        row(x_off() + k) = -prob_.bid(i);
        prog.add_le(row, 0.0);
      }
      row.setZero();
      row.segment(cap_off(), n).setOnes();
      prog.add_le(row, *prob_.omega.option_cap);
    }
    if (prob_.omega.option_cap && n > 0 && !cap) {
      row.setZero();
      for (Index k = 0; k < n; ++k) row(x_off() + k) = prob_.ask(active_[static_cast<std::size_t>(k)]);
      prog.add_le(row, *prob_.omega.option_cap);
    }
    if (prob_.min_return) {
      row.setZero();
      row.segment(x_off(), n) = -um_.eta;
      row.segment(y_off(), m) = -prob_.model.mu();
      prog.add_le(row, -*prob_.min_return);
    }
    return prog;
  }

  /// Full-length holdings from a solver vector.
  void unpack(const Vector& v, Vector& x, Vector& y) const {
    x = Vector::Zero(static_cast<Index>(prob_.greeks.size()));
    for (Index k = 0; k < num_active(); ++k) x(active_[static_cast<std::size_t>(k)]) = v(x_off() + k);
    y = v.segment(y_off(), prob_.model.size());
  }

  /// Expected return, standard deviation and per-event CoVaR of holdings
  /// over the active options.
  void evaluate(const Vector& x_active, const Vector& y, double& mean, double& sd, Vector& covar) const {
    UnconditionalMoments um = um_;
    um.evaluate(x_active, y);
    mean = um.mean;
    sd = std::sqrt(um.variance);
    covar.resize(static_cast<Index>(events_.size()));
    const double alpha = risk_multiplier(prob_.mode, prob_.q_conf);
    for (std::size_t e = 0; e < events_.size(); ++e) {
      ConditionalMoments cm = events_[e].cm;
      cm.evaluate(x_active, y);
      covar(static_cast<Index>(e)) = alpha * std::sqrt(cm.variance) - cm.mean;
    }
  }

  P1Solution solve_variant(P1Objective objective = P1Objective::max_return,
                           std::optional<Vector> rho_override = std::nullopt,
                           std::optional<double> sigma_override = std::nullopt,
                           const SolverOptions& opt = {}) const {
    P1Solution out;
    out.raw = covaropt::solve(build(objective, rho_override, sigma_override), opt);
    out.status = out.raw.status;
    unpack(out.raw.x, out.x, out.y);
    evaluate(out.raw.x.segment(x_off(), num_active()), out.y, out.expected_return, out.std_dev, out.covar);
    return out;
  }

 private:
  struct EventData {
    ConditionalMoments cm;
    Matrix q;
    Matrix nfac;
    IndexSet others;
  };

  // coef * x_k >= bound (lower) or coef * x_k <= bound (upper).
  static void set_scaled_bound(ConeProgram& prog, Index k, double coef, double bound, bool lower) {
    if (coef > 0.0) {
      if (lower) prog.lower(k) = std::max(prog.lower(k), bound / coef);
      else prog.upper(k) = std::min(prog.upper(k), bound / coef);
      require(prog.lower(k) <= prog.upper(k), "build_p1: inconsistent option bounds");
    } else {
      require(lower ? bound <= 0.0 : bound >= 0.0, "build_p1: option bound unattainable at zero price");
    }
  }

  P1Problem prob_;
  IndexSet active_;
  UnconditionalMoments um_;
  Matrix h_;
  Matrix mfac_;
  std::vector<EventData> events_;
};

inline ConeProgram build_p1(const P1Problem& problem) { return P1Builder(problem).build(); }

inline P1Solution solve_p1(const P1Problem& problem, const SolverOptions& opt = {}) {
  return P1Builder(problem).solve_variant(P1Objective::max_return, std::nullopt, std::nullopt, opt);
}

// ---------------------------------------------------------------------------
// Frontier

struct FrontierCell {
  double rho_bar = 0.0;
  double sigma_bar = 0.0;
  double expected_return = 0.0;
  SolveStatus status = SolveStatus::max_iter;
};

/// (rho_bar, sigma_bar) grid: rho_bar from the minimal CoVaR to the CoVaR
/// of the unconstrained maximal-return portfolio; for each rho_bar, sigma_bar
/// from the minimal standard deviation to the standard deviation of the
/// maximal-return portfolio under that rho_bar. One common rho_bar is
/// applied to every event.
inline std::vector<std::pair<double, double>> frontier_grid(const P1Builder& builder, int grid = 20) {
  require(grid >= 2, "frontier: grid must have at least 2 points per axis");
  const Index h = static_cast<Index>(builder.problem().events.size());
  require_dims(h >= 1, "frontier: need at least one distress event");
  const P1Solution lo = builder.solve_variant(P1Objective::min_covar);
  const P1Solution hi = builder.solve_variant(P1Objective::max_return, Vector::Constant(h, kInf), kInf);
  if (!lo.optimal() || !hi.optimal())
    throw std::runtime_error("frontier: range solves failed");
  const double rho_lo = lo.raw.objective * -1.0;
  const double rho_hi = std::max(rho_lo, hi.covar.maxCoeff());

  std::vector<double> rhos(static_cast<std::size_t>(grid));
  for (int a = 0; a < grid; ++a) rhos[static_cast<std::size_t>(a)] = rho_lo + (rho_hi - rho_lo) * a / (grid - 1);
  std::vector<std::pair<double, double>> cells(static_cast<std::size_t>(grid * grid));
  parallel_for(rhos.size(), [&](std::size_t a) {
    const Vector rv = Vector::Constant(h, rhos[a]);
    const P1Solution smin = builder.solve_variant(P1Objective::min_std, rv, kInf);
    const P1Solution smax = builder.solve_variant(P1Objective::max_return, rv, kInf);
    const double s_lo = smin.optimal() ? -smin.raw.objective : 0.0;
    const double s_hi = smax.optimal() ? std::max(s_lo, smax.std_dev) : s_lo;
    for (int b = 0; b < grid; ++b)
      cells[a * static_cast<std::size_t>(grid) + static_cast<std::size_t>(b)] = {
          rhos[a], s_lo + (s_hi - s_lo) * b / (grid - 1)};
  });
  return cells;
}

inline std::vector<FrontierCell> evaluate_frontier(const P1Builder& builder,
                                                   const std::vector<std::pair<double, double>>& cells) {
  const Index h = static_cast<Index>(builder.problem().events.size());
  std::vector<FrontierCell> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto [rho, sigma] = cells[i];
    const P1Solution s = builder.solve_variant(P1Objective::max_return, Vector::Constant(h, rho), sigma);
    out[i] = {rho, sigma, s.optimal() ? s.expected_return : std::nan(""), s.status};
  });
  return out;
}

inline std::vector<FrontierCell> frontier(const P1Builder& builder, int grid = 20) {
  return evaluate_frontier(builder, frontier_grid(builder, grid));
}

}  // namespace covaropt
