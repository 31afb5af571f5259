#pragma once

#include <cmath>

#include "covaropt/core.hpp"

namespace covaropt::linalg {

/// Relative eigenvalue clamp used for all PSD square roots.
inline constexpr double kClampRelative = 1e-12;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline bool is_symmetric(const Matrix& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

namespace detail {
inline Vector clamped(const Vector& eig) {
  const double top = eig.size() ? eig.cwiseAbs().maxCoeff() : 0.0;
  const double floor = kClampRelative * top;
  Vector out = eig;
  for (Index i = 0; i < out.size(); ++i)
    if (out(i) <= floor) out(i) = 0.0;
  return out;
}
}  // namespace detail

/// Symmetric square root of a PSD matrix. Eigenvalues at or below
/// 1e-12 * max|eigenvalue| are treated as zero.
inline Matrix psd_sqrt(const Matrix& a) {
  if (a.size() == 0) return Matrix(a.rows(), a.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector lam = detail::clamped(es.eigenvalues()).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Moore-Penrose inverse of the symmetric square root.
inline Matrix psd_pinv_sqrt(const Matrix& a) {
  if (a.size() == 0) return Matrix(a.rows(), a.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  Vector lam = detail::clamped(es.eigenvalues());
  for (Index i = 0; i < lam.size(); ++i) lam(i) = lam(i) > 0.0 ? 1.0 / std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Any F with F^T F = A. The symmetric root is used, so F is square.
inline Matrix psd_factor(const Matrix& a) { return psd_sqrt(a); }

/// Ratio of smallest to largest singular value; 0 for an empty matrix.
inline double inverse_condition(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

inline double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Correlation matrix of a covariance matrix.
inline Matrix cov_to_corr(const Matrix& cov) {
  const Vector inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

}  // namespace covaropt::linalg
