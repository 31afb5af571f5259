#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "covaropt/core.hpp"

namespace covaropt::optim {

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Central-difference gradient with per-coordinate relative step.
template <typename F>
Vector numeric_gradient(F&& f, const Vector& x, double rel_step = 1e-5) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double fp = f(probe);
    probe(i) = x(i) - h;
    const double fm = f(probe);
    probe(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Hessian.
template <typename F>
Matrix numeric_hessian(F&& f, const Vector& x, double rel_step = 1e-4) {
  const Index n = x.size();
  Matrix h(n, n);
  Vector step(n);
  for (Index i = 0; i < n; ++i) step(i) = rel_step * std::max(1e-3, std::abs(x(i)));
  Vector p = x;
  const double f0 = f(x);
  for (Index i = 0; i < n; ++i) {
    p(i) = x(i) + step(i);
    const double fp = f(p);
    p(i) = x(i) - step(i);
    const double fm = f(p);
    p(i) = x(i);
    h(i, i) = (fp - 2.0 * f0 + fm) / (step(i) * step(i));
    for (Index j = 0; j < i; ++j) {
      p(i) = x(i) + step(i); p(j) = x(j) + step(j);
      const double fpp = f(p);
      p(j) = x(j) - step(j);
      const double fpm = f(p);
      p(i) = x(i) - step(i);
      const double fmm = f(p);
      p(j) = x(j) + step(j);
      const double fmp = f(p);
      p(i) = x(i); p(j) = x(j);
      h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * step(i) * step(j));
    }
  }
  return h;
}

/// BFGS with Armijo backtracking on a smooth objective; gradients by central
/// differences. Non-finite objective values are treated as +inf so the line
/// search retreats from them.
template <typename F>
MinimizeResult bfgs(F&& f, Vector x0, int max_iter = 500, double grad_tol = 1e-6) {
  auto safe = [&](const Vector& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  MinimizeResult res;
  const Index n = x0.size();
  Vector x = std::move(x0);
  double fx = safe(x);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "objective not finite at the starting point";
    return res;
  }
  Vector g = numeric_gradient(safe, x);
  Matrix hinv = Matrix::Identity(n, n);
  int stalls = 0;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    Vector dir = -hinv * g;
    if (dir.dot(g) >= 0.0) {
      hinv.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    double fnew = kInf;
    Vector xnew;
    const double slope = dir.dot(g);
    for (int ls = 0; ls < 60; ++ls) {
      xnew = x + step * dir;
      fnew = safe(xnew);
      if (fnew <= fx + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(fnew < fx)) {
      res.converged = g.lpNorm<Eigen::Infinity>() <= 1e-3 * (1.0 + std::abs(fx));
      res.message = "line search could not decrease the objective";
      break;
    }
    const Vector gnew = numeric_gradient(safe, xnew);
    const Vector s = xnew - x;
    const Vector yv = gnew - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Matrix id = Matrix::Identity(n, n);
      hinv = (id - rho * s * yv.transpose()) * hinv * (id - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    const double rel_change = std::abs(fx - fnew) / (1.0 + std::abs(fx));
    x = xnew;
    fx = fnew;
    g = gnew;
    stalls = rel_change < 1e-13 ? stalls + 1 : 0;
    if (stalls >= 5) {
      res.converged = true;
      res.message = "objective stalled";
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  res.x = x;
  res.value = fx;
  return res;
}

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace covaropt::optim
