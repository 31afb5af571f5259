#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "covaropt/core.hpp"

namespace covaropt {

/// ||tail_coef x + tail_const|| <= head_coef' x + head_const.
struct SocBlock {
  Vector head_coef;
  double head_const = 0.0;
  Matrix tail_coef;
  Vector tail_const;
  std::string name;
};

/// maximize objective' x subject to
///   eq_a x = eq_b,  le_a x <= le_b,  lower <= x <= upper,  and SOC blocks.
struct ConeProgram {
  Vector objective;
  Matrix eq_a;
  Vector eq_b;
  Matrix le_a;
  Vector le_b;
  Vector lower;
  Vector upper;
  std::vector<SocBlock> cones;

  ConeProgram() = default;
  explicit ConeProgram(Index n)
      : objective(Vector::Zero(n)),
        eq_a(0, n),
        eq_b(0),
        le_a(0, n),
        le_b(0),
        lower(Vector::Constant(n, -kInf)),
        upper(Vector::Constant(n, kInf)) {}

  Index num_vars() const { return objective.size(); }

  void add_eq(const Vector& row, double rhs) {
    require_dims(row.size() == num_vars(), "ConeProgram: row length");
    eq_a.conservativeResize(eq_a.rows() + 1, Eigen::NoChange);
    eq_a.bottomRows(1) = row.transpose();
    eq_b.conservativeResize(eq_b.size() + 1);
    eq_b(eq_b.size() - 1) = rhs;
  }

  void add_le(const Vector& row, double rhs) {
    require_dims(row.size() == num_vars(), "ConeProgram: row length");
    le_a.conservativeResize(le_a.rows() + 1, Eigen::NoChange);
    le_a.bottomRows(1) = row.transpose();
    le_b.conservativeResize(le_b.size() + 1);
    le_b(le_b.size() - 1) = rhs;
  }

  void add_cone(SocBlock block) {
    require_dims(block.head_coef.size() == num_vars() && block.tail_coef.cols() == num_vars() &&
                     block.tail_coef.rows() == block.tail_const.size(),
                 "ConeProgram: cone block dimensions");
    cones.push_back(std::move(block));
  }

  void validate() const {
    const Index n = num_vars();
    require_dims(eq_a.cols() == n && eq_a.rows() == eq_b.size(), "ConeProgram: equality block");
    require_dims(le_a.cols() == n && le_a.rows() == le_b.size(), "ConeProgram: inequality block");
    require_dims(lower.size() == n && upper.size() == n, "ConeProgram: bounds");
    for (Index i = 0; i < n; ++i)
      require(lower(i) <= upper(i), "ConeProgram: inconsistent variable bounds");
    for (const auto& c : cones)
      require_dims(c.head_coef.size() == n && c.tail_coef.cols() == n &&
                       c.tail_coef.rows() == c.tail_const.size(),
                   "ConeProgram: cone block dimensions");
  }
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

struct Solution {
  SolveStatus status = SolveStatus::max_iter;
  Vector x;
  double objective = 0.0;
  Vector eq_duals;
  Vector le_duals;           ///< linear rows, then finite lower bounds, then finite upper bounds
  std::vector<Vector> cone_duals;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double gap = kInf;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::optimal; }
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 100;
  double infeasibility_ratio = 1e-8;
  bool verbose = false;
};

namespace detail {

// Symmetric cone K = R+^l x Q^{q_1} x ... ; vectors are stacked blockwise.
struct ConeLayout {
  Index orthant = 0;
  std::vector<Index> soc;

  Index dim() const {
    Index d = orthant;
    for (Index q : soc) d += q;
    return d;
  }
  Index degree() const { return orthant + static_cast<Index>(soc.size()); }
};

inline double soc_det(const Eigen::Ref<const Vector>& u) {
  return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

// Smallest alpha with u + alpha e in K (negative when u is interior).
inline double cone_shift(const ConeLayout& k, const Vector& u) {
  double a = -kInf;
  if (k.orthant > 0) a = std::max(a, -u.head(k.orthant).minCoeff());
  Index off = k.orthant;
  for (Index q : k.soc) {
    a = std::max(a, u.segment(off + 1, q - 1).norm() - u(off));
    off += q;
  }
  return a;
}

inline Vector unit(const ConeLayout& k) {
  Vector e = Vector::Zero(k.dim());
  e.head(k.orthant).setOnes();
  Index off = k.orthant;
  for (Index q : k.soc) {
    e(off) = 1.0;
    off += q;
  }
  return e;
}

inline Vector push_interior(const ConeLayout& k, Vector u) {
  const double a = cone_shift(k, u);
  if (a >= 0.0) u += (1.0 + a) * unit(k);
  return u;
}

// Largest step keeping u + alpha d in K.
inline double max_step(const ConeLayout& k, const Vector& u, const Vector& d) {
  double alpha = kInf;
  for (Index i = 0; i < k.orthant; ++i)
    if (d(i) < 0.0) alpha = std::min(alpha, -u(i) / d(i));
  Index off = k.orthant;
  for (Index q : k.soc) {
    const auto us = u.segment(off, q);
    const auto ds = d.segment(off, q);
    const double c = soc_det(us);
    const double b = us(0) * ds(0) - us.tail(q - 1).dot(ds.tail(q - 1));
    const double a = soc_det(ds);
    double root = kInf;
    if (c <= 0.0) {
      root = 0.0;
    } else if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -c / (2.0 * b);
    } else {
      const double disc = b * b - a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double qq = -(b + (b >= 0.0 ? sq : -sq));
        const double r1 = qq / a;
        const double r2 = qq != 0.0 ? c / qq : kInf;
        if (r1 > 0.0) root = std::min(root, r1);
        if (r2 > 0.0) root = std::min(root, r2);
      }
    }
    if (ds(0) < 0.0) root = std::min(root, -us(0) / ds(0));
    alpha = std::min(alpha, root);
    off += q;
  }
  return alpha;
}

inline Vector jordan_product(const ConeLayout& k, const Vector& u, const Vector& v) {
  Vector w(u.size());
  w.head(k.orthant) = u.head(k.orthant).cwiseProduct(v.head(k.orthant));
  Index off = k.orthant;
  for (Index q : k.soc) {
    w(off) = u.segment(off, q).dot(v.segment(off, q));
    w.segment(off + 1, q - 1) = u(off) * v.segment(off + 1, q - 1) + v(off) * u.segment(off + 1, q - 1);
    off += q;
  }
  return w;
}

// Solves lambda o w = v for w.
inline Vector jordan_divide(const ConeLayout& k, const Vector& lambda, const Vector& v) {
  Vector w(v.size());
  w.head(k.orthant) = v.head(k.orthant).cwiseQuotient(lambda.head(k.orthant));
  Index off = k.orthant;
  for (Index q : k.soc) {
    const auto l = lambda.segment(off, q);
    const auto vv = v.segment(off, q);
    const double l0 = l(0);
    const double w0 = (l0 * vv(0) - l.tail(q - 1).dot(vv.tail(q - 1))) / soc_det(l);
    w(off) = w0;
    w.segment(off + 1, q - 1) = (vv.tail(q - 1) - w0 * l.tail(q - 1)) / l0;
    off += q;
  }
  return w;
}

// Nesterov-Todd scaling: W z = W^{-1} s = lambda, W symmetric block diagonal.
struct NtScaling {
  Matrix w;
  Matrix w_inv;
  Vector lambda;
};

inline NtScaling nt_scaling(const ConeLayout& k, const Vector& s, const Vector& z) {
  const Index d = k.dim();
  NtScaling nt;
  nt.w = Matrix::Zero(d, d);
  nt.w_inv = Matrix::Zero(d, d);
  for (Index i = 0; i < k.orthant; ++i) {
    const double wi = std::sqrt(s(i) / z(i));
    nt.w(i, i) = wi;
    nt.w_inv(i, i) = 1.0 / wi;
  }
  Index off = k.orthant;
  for (Index q : k.soc) {
    const Vector ss = s.segment(off, q);
    const Vector zz = z.segment(off, q);
    const double js = std::sqrt(soc_det(ss));
    const double jz = std::sqrt(soc_det(zz));
    const Vector sb = ss / js;
    const Vector zb = zz / jz;
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    Vector wb(q);
    wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
    wb.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
    const double eta = std::sqrt(js / jz);
    Matrix blk(q, q);
    blk(0, 0) = wb(0);
    blk.block(0, 1, 1, q - 1) = wb.tail(q - 1).transpose();
    blk.block(1, 0, q - 1, 1) = wb.tail(q - 1);
    blk.block(1, 1, q - 1, q - 1) = Matrix::Identity(q - 1, q - 1) +
                                    wb.tail(q - 1) * wb.tail(q - 1).transpose() / (1.0 + wb(0));
    nt.w.block(off, off, q, q) = eta * blk;
    // Inverse of the hyperbolic block is J blk J.
    Matrix inv = blk;
    inv.block(0, 1, 1, q - 1) *= -1.0;
    inv.block(1, 0, q - 1, 1) *= -1.0;
    nt.w_inv.block(off, off, q, q) = inv / eta;
    off += q;
  }
  nt.lambda = nt.w * z;
  return nt;
}

}  // namespace detail

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps on dense data.
inline Solution solve(const ConeProgram& prog, const SolverOptions& opt = {}) {
  prog.validate();
  const Index n = prog.num_vars();

  // Standard form: minimize c'x, A x = b, G x + s = h, s in K.
  detail::ConeLayout cone;
  std::vector<Index> lower_idx, upper_idx;
  for (Index i = 0; i < n; ++i) {
    if (std::isfinite(prog.lower(i))) lower_idx.push_back(i);
    if (std::isfinite(prog.upper(i))) upper_idx.push_back(i);
  }
  cone.orthant = prog.le_a.rows() + static_cast<Index>(lower_idx.size() + upper_idx.size());
  for (const auto& c : prog.cones) cone.soc.push_back(1 + c.tail_coef.rows());
  const Index mg = cone.dim();
  const Index p = prog.eq_a.rows();

  Matrix g = Matrix::Zero(mg, n);
  Vector h = Vector::Zero(mg);
  Index row = 0;
  g.topRows(prog.le_a.rows()) = prog.le_a;
  h.head(prog.le_b.size()) = prog.le_b;
  row = prog.le_a.rows();
  for (Index i : lower_idx) {
    g(row, i) = -1.0;
    h(row++) = -prog.lower(i);
  }
  for (Index i : upper_idx) {
    g(row, i) = 1.0;
    h(row++) = prog.upper(i);
  }
  for (const auto& c : prog.cones) {
    g.row(row) = -c.head_coef.transpose();
    h(row++) = c.head_const;
    const Index q = c.tail_coef.rows();
    g.middleRows(row, q) = -c.tail_coef;
    h.segment(row, q) = c.tail_const;
    row += q;
  }
  const Matrix& a = prog.eq_a;
  const Vector& b = prog.eq_b;
  const Vector c = -prog.objective;

  const Index dim = n + p + mg;
  const double reg = 1e-11;
  Matrix kkt = Matrix::Zero(dim, dim);
  kkt.block(0, n, n, p) = a.transpose();
  kkt.block(0, n + p, n, mg) = g.transpose();
  kkt.block(n, 0, p, n) = a;
  kkt.block(n + p, 0, mg, n) = g;

  Matrix kkt_reg;
  Eigen::PartialPivLU<Matrix> lu;
  auto factor = [&](const Matrix& w2) {
    kkt.block(n + p, n + p, mg, mg) = -w2;
    kkt_reg = kkt;
    kkt_reg.diagonal().head(n).array() += reg;
    kkt_reg.diagonal().segment(n, p).array() -= reg;
    kkt_reg.diagonal().tail(mg).array() -= reg;
    lu.compute(kkt_reg);
  };
  auto kkt_solve = [&](const Vector& rhs) {
    Vector sol = lu.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      const Vector res = rhs - kkt * sol;
      if (res.lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += lu.solve(res);
    }
    return sol;
  };

  Solution out;
  out.x = Vector::Zero(n);

  // Initial point from two least-squares style solves.
  factor(Matrix::Identity(mg, mg));
  Vector rhs = Vector::Zero(dim);
  rhs.segment(n, p) = b;
  rhs.tail(mg) = h;
  Vector sol = kkt_solve(rhs);
  Vector x = sol.head(n);
  Vector s = detail::push_interior(cone, -sol.tail(mg));
  rhs.setZero();
  rhs.head(n) = -c;
  sol = kkt_solve(rhs);
  Vector y = sol.segment(n, p);
  Vector z = detail::push_interior(cone, sol.tail(mg));
  double tau = 1.0, kappa = 1.0;

  const double nb = b.size() ? b.norm() : 0.0;
  const double nh = h.size() ? h.norm() : 0.0;
  const double nc = c.norm();
  const double deg = static_cast<double>(cone.degree());
  const Vector e = detail::unit(cone);

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    out.iterations = iter;
    const Vector rx = a.transpose() * y + g.transpose() * z + c * tau;
    const Vector ry = a * x - b * tau;
    const Vector rz = s + g * x - h * tau;
    const double ctx = c.dot(x), bty = b.dot(y), htz = h.dot(z);
    const double rt = kappa + ctx + bty + htz;

    const double pcost = ctx / tau;
    const double dcost = -(bty + htz) / tau;
    const double pres = std::max(ry.size() ? ry.norm() : 0.0, rz.norm()) / tau / (1.0 + std::max(nb, nh));
    const double dres = rx.norm() / tau / (1.0 + nc);
    const double gap = s.dot(z) / (tau * tau) / std::max(1.0, std::abs(pcost));
    if (opt.verbose)
      std::clog << "iter " << iter << " pcost " << pcost << " dcost " << dcost << " pres " << pres
                << " dres " << dres << " gap " << gap << " tau " << tau << " kappa " << kappa << '\n';

    out.x = x / tau;
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    if (pres < opt.tol && dres < opt.tol && gap < opt.tol) {
      out.status = SolveStatus::optimal;
      out.message = "converged";
      break;
    }

    // Infeasibility certificates.
    const double dual_ray = -(bty + htz);
    const double rx0 = (a.transpose() * y + g.transpose() * z).norm();
    if (dual_ray > 0.0 && rx0 / dual_ray < opt.tol &&
        (tau < opt.infeasibility_ratio * kappa || rx0 / dual_ray < opt.tol * 1e-2 || tau < 1e-10 * kappa * 1e2)) {
      out.status = SolveStatus::infeasible;
      out.message = "primal infeasibility certificate";
      break;
    }
    if (ctx < 0.0) {
      const double ray_res = std::max(p ? (a * x).norm() : 0.0, (g * x + s).norm());
      if (ray_res / -ctx < opt.tol &&
          (tau < opt.infeasibility_ratio * kappa || ray_res / -ctx < opt.tol * 1e-2)) {
        out.status = SolveStatus::unbounded;
        out.message = "dual infeasibility certificate";
        break;
      }
    }
    if (tau < opt.infeasibility_ratio * kappa) {
      out.status = dual_ray > 0.0 ? SolveStatus::infeasible
                   : ctx < 0.0    ? SolveStatus::unbounded
                                  : SolveStatus::max_iter;
      out.message = "tau/kappa below threshold";
      if (out.status != SolveStatus::max_iter) break;
    }
    if (iter == opt.max_iter) {
      out.status = SolveStatus::max_iter;
      out.message = "iteration limit reached";
      break;
    }

    const auto nt = detail::nt_scaling(cone, s, z);
    const Vector& lambda = nt.lambda;
    factor(nt.w * nt.w);
    const double mu = (s.dot(z) + tau * kappa) / (deg + 1.0);

    Vector rhs1(dim);
    rhs1 << -c, b, h;
    const Vector sol1 = kkt_solve(rhs1);
    const double denom1_base = c.dot(sol1.head(n)) + b.dot(sol1.segment(n, p)) + h.dot(sol1.tail(mg));

    auto direction = [&](const Vector& dxr, const Vector& dyr, const Vector& dzr, double dtr,
                         const Vector& dsr, double dkr, Vector& dx, Vector& dy, Vector& dz, Vector& ds,
                         double& dtau, double& dkappa) {
      const Vector wl = nt.w * detail::jordan_divide(cone, lambda, dsr);
      Vector rhs2(dim);
      rhs2 << -dxr, -dyr, -dzr + wl;
      const Vector sol2 = kkt_solve(rhs2);
      const double num = -dtr + dkr / tau -
                         (c.dot(sol2.head(n)) + b.dot(sol2.segment(n, p)) + h.dot(sol2.tail(mg)));
      dtau = num / (denom1_base - kappa / tau);
      dx = sol2.head(n) + dtau * sol1.head(n);
      dy = sol2.segment(n, p) + dtau * sol1.segment(n, p);
      dz = sol2.tail(mg) + dtau * sol1.tail(mg);
      ds = -wl - nt.w * (nt.w * dz);
      dkappa = (-dkr - kappa * dtau) / tau;
    };
    auto step_length = [&](const Vector& ds, const Vector& dz, double dtau, double dkappa) {
      double alpha = std::min(detail::max_step(cone, s, ds), detail::max_step(cone, z, dz));
      if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
      if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
      return std::min(1.0, alpha);
    };

    // Predictor.
    Vector dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
    const Vector ll = detail::jordan_product(cone, lambda, lambda);
    direction(rx, ry, rz, rt, ll, tau * kappa, dx, dy, dz, ds, dtau, dkappa);
    const double alpha_aff = step_length(ds, dz, dtau, dkappa);
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-8, 1.0);

    // Corrector.
    const Vector cross = detail::jordan_product(cone, nt.w_inv * ds, nt.w * dz);
    const Vector dsr = ll + cross - sigma * mu * e;
    const double dkr = tau * kappa + dtau * dkappa - sigma * mu;
    const double shrink = 1.0 - sigma;
    direction(shrink * rx, shrink * ry, shrink * rz, shrink * rt, dsr, dkr, dx, dy, dz, ds, dtau,
              dkappa);
    const double alpha = 0.99 * step_length(ds, dz, dtau, dkappa);
    if (alpha < 1e-12) {
      out.status = SolveStatus::max_iter;
      out.message = "step length collapsed";
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  out.objective = prog.objective.dot(out.x);
  const double scale = out.status == SolveStatus::optimal ? 1.0 / tau : 1.0;
  out.eq_duals = y * scale;
  out.le_duals = z.head(cone.orthant) * scale;
  Index off = cone.orthant;
  for (Index q : cone.soc) {
    out.cone_duals.push_back(z.segment(off, q) * scale);
    off += q;
  }
  return out;
}

}  // namespace covaropt
