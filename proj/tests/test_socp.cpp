#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"
#include "oracles.hpp"

using namespace covaropt;

// Brute-force LP oracle: best vertex of {A x <= b} in two variables.
double lp_vertex_oracle(const Matrix& a, const Vector& b, const Vector& c) {
  double best = -kInf;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.rows(); ++j) {
      Matrix m(2, 2);
      m << a.row(i), a.row(j);
      if (std::abs(m.determinant()) < 1e-12) continue;
      const Vector x = m.lu().solve(Vector{{b(i), b(j)}});
      if (((a * x - b).array() <= 1e-9).all()) best = std::max(best, c.dot(x));
    }
  return best;
}

TEST(Socp, LinearProgramsMatchVertexEnumeration) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const Index rows = 8;
    Matrix a(rows, 2);
    Vector b(rows);
    for (Index i = 0; i < rows; ++i) {
      const double th = 2.0 * M_PI * (i + 0.3 * u(rng)) / rows;
      a.row(i) << std::cos(th), std::sin(th);
      b(i) = 1.0 + 0.5 * u(rng);
    }
    const Vector c{{u(rng), u(rng)}};
    ConeProgram p(2);
    p.objective = c;
    for (Index i = 0; i < rows; ++i) p.add_le(a.row(i).transpose(), b(i));
    const Solution s = solve(p);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_NEAR(s.objective, lp_vertex_oracle(a, b, c), 1e-7);
  }
}

TEST(Socp, MinimumVarianceMatchesMarkowitz) {
  std::mt19937_64 rng(9);
  const Matrix sigma = oracle::random_covariance(5, rng, 0.1, 0.3);
  const Vector ones = Vector::Ones(5);
  const Vector w = sigma.ldlt().solve(ones);
  const double var_star = 1.0 / ones.dot(w);
  // Variables (w, t): max -t, ||L' w|| <= t, 1'w = 1.
  ConeProgram p(6);
  p.objective(5) = -1.0;
  Vector row = Vector::Zero(6);
  row.head(5).setOnes();
  p.add_eq(row, 1.0);
  SocBlock c;
  c.head_coef = Vector::Unit(6, 5);
  c.tail_coef = Matrix::Zero(5, 6);
  c.tail_coef.leftCols(5) = Matrix(sigma.llt().matrixU());
  c.tail_const = Vector::Zero(5);
  p.add_cone(c);
  const Solution s = solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(-s.objective, std::sqrt(var_star), 1e-8);
  EXPECT_LT((s.x.head(5) - w / ones.dot(w)).norm(), 1e-6);
  EXPECT_LT(s.primal_residual, 1e-8);
  EXPECT_LT(s.dual_residual, 1e-8);
}

TEST(Socp, DetectsInfeasibleAndUnbounded) {
  ConeProgram inf(2);
  inf.add_le(Vector{{1.0, 0.0}}, -1.0);
  inf.lower(0) = 0.0;
  EXPECT_EQ(solve(inf).status, SolveStatus::infeasible);

  ConeProgram unb(2);
  unb.objective << 1.0, 1.0;
  unb.add_le(Vector{{-1.0, 0.0}}, 0.0);
  unb.lower(1) = 0.0;
  EXPECT_EQ(solve(unb).status, SolveStatus::unbounded);
}

TEST(Socp, ValidateRejectsInconsistentBounds) {
  ConeProgram p(1);
  p.lower(0) = 1.0;
  p.upper(0) = 0.0;
  EXPECT_THROW(solve(p), DomainError);
  EXPECT_THROW(p.add_le(Vector::Ones(2), 0.0), DimensionError);
}

TEST(Socp, RotatedHyperbolicConstraint) {
  // max x s.t. ||(x, y)|| <= 2 and y = 1: x = sqrt(3).
  ConeProgram p(2);
  p.objective(0) = 1.0;
  p.add_eq(Vector{{0.0, 1.0}}, 1.0);
  SocBlock c;
  c.head_coef = Vector::Zero(2);
  c.head_const = 2.0;
  c.tail_coef = Matrix::Identity(2, 2);
  c.tail_const = Vector::Zero(2);
  p.add_cone(c);
  const Solution s = solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective, std::sqrt(3.0), 1e-8);
}
