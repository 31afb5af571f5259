#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"
#include "oracles.hpp"

using namespace covaropt;

TEST(Controllability, BoundEqualsMinimumOverSimplexVertices) {
  // Two stocks, one distressed: the J part is a single stock, so both
  // bounds are single-portfolio CoVaRs.
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const MarketModel model = oracle::random_model(2, rng);
    const auto ev = DistressEvent::at_var(model, {0}, 0.95);
    const ControllabilityReport r = controllability_bounds(model, ev, 0.95);
    const Vector only0 = Vector::Unit(2, 0) / model.prices()(0);
    const Vector only1 = Vector::Unit(2, 1) / model.prices()(1);
    EXPECT_NEAR(r.bound_i, stock_covar(model, ev, only0, 0.95), 1e-12);
    EXPECT_NEAR(r.bound_j, stock_covar(model, ev, only1, 0.95), 1e-7);
    EXPECT_TRUE(r.infeasible(r.min_covar() - 1e-3));
    EXPECT_FALSE(r.infeasible(r.min_covar() + 1e-3));
  }
}

TEST(Controllability, NoOtherStocks) {
  const MarketModel m(Vector::Ones(2), Vector::Zero(2), Matrix::Identity(2, 2), 1.0);
  const auto r = controllability_bounds(m, DistressEvent::at_var(m, {0, 1}, 0.95), 0.95);
  EXPECT_EQ(r.bound_j, kInf);
  EXPECT_NEAR(r.bound_i, normal_quantile(0.95), 1e-14);
}

TEST(Seesaw, BothRegimesExist) {
  bool neg = false, pos = false;
  for (double s22 : linspace(0.001, 0.05, 50)) {
    Matrix cov(2, 2);
    const double c = 0.1 * std::sqrt(0.01 * s22);
    cov << 0.01, c, c, s22;
    const auto sc = seesaw_coefficients(MarketModel(Vector::Ones(2), Vector::Zero(2), cov, 1.0), 0.95, 0.95);
    neg = neg || sc.seesaw;
    pos = pos || sc.slope1 * sc.slope2 > 0.0;
  }
  EXPECT_TRUE(neg);
  EXPECT_TRUE(pos);
}

TEST(Seesaw, SlopesAreCovarDifferences) {
  Matrix cov(2, 2);
  cov << 0.01, 0.001, 0.001, 0.02;
  const MarketModel m(Vector{{1.0, 2.0}}, Vector::Zero(2), cov, 1.0);
  const auto sc = seesaw_coefficients(m, 0.95, 0.95);
  // CoVaR of w in stock 1 and 1 - w in stock 2 is linear in w.
  const auto ev = DistressEvent::at_var(m, {0}, 0.95);
  auto covar_at = [&](double w) { return stock_covar(m, ev, Vector{{w, (1.0 - w) / 2.0}}, 0.95); };
  EXPECT_NEAR(covar_at(0.7) - covar_at(0.2), 0.5 * sc.slope1, 1e-12);
  EXPECT_THROW(seesaw_coefficients(MarketModel(Vector::Ones(3), Vector::Zero(3), Matrix::Identity(3, 3), 1.0), 0.95, 0.95),
               DimensionError);
}

TEST(Contagion, MatchesStockCovarOfEqualWeights) {
  for (double rho : {-0.4, 0.0, 0.6}) {
    Matrix cov(2, 2);
    cov << 0.01, rho * 0.01, rho * 0.01, 0.01;
    const MarketModel m(Vector::Ones(2), Vector::Zero(2), cov, 1.0);
    const double loss = 0.12;
    const double cv = stock_covar(m, DistressEvent::with_losses(2, {0}, Vector::Constant(1, loss)), Vector::Constant(2, 0.5), 0.95);
    EXPECT_NEAR(contagion_surface({rho}, {loss}, 0.95).front().covar, cv, 1e-14);
  }
  EXPECT_THROW(contagion_surface({1.5}, {0.1}, 0.95), DomainError);
}
