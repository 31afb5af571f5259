#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"

using namespace covaropt;

TEST(Gjr, VarianceRecursionAndValidation) {
  GjrGarch g{1e-5, 0.05, 0.1, 0.8, 0.0};
  EXPECT_DOUBLE_EQ(g.next_variance(0.1, 0.01), 1e-5 + 0.05 * 0.01 + 0.8 * 0.01);
  EXPECT_DOUBLE_EQ(g.next_variance(-0.1, 0.01), 1e-5 + 0.15 * 0.01 + 0.8 * 0.01);
  EXPECT_NEAR(g.unconditional_variance(), 1e-5 / 0.1, 1e-18);
  GjrGarch bad{1e-5, 0.2, 0.2, 0.8, 0.0};
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Gjr, ForecastConvergesToUnconditional) {
  GarchSpec spec{{GjrGarch{1e-5, 0.05, 0.1, 0.8, 0.0}}, 0.05, kWeek};
  MarketState st{Vector::Constant(1, -0.05), Vector::Constant(1, 5e-4), Matrix::Identity(1, 1)};
  const Matrix f = forecast_variance(spec, st, 400);
  EXPECT_DOUBLE_EQ(f(0, 0), spec.stocks[0].next_variance(-0.05, 5e-4));
  EXPECT_NEAR(f(399, 0), spec.stocks[0].unconditional_variance(), 1e-12);
}

TEST(Gjr, DiscretionSignalIsStrictMajority) {
  GarchSpec spec;
  for (int i = 0; i < 4; ++i) spec.stocks.push_back(GjrGarch{1e-5, 0.05, 0.1, 0.8, 0.0});
  MarketState st{Vector::Zero(4), Vector::Constant(4, 1e-4), Matrix::Identity(4, 4)};
  // Forecast 1e-5 + 0.8e-4 = 9e-5 < 1e-4 for all: risk on.
  EXPECT_FALSE(discretion_signal(spec, st, st.var));
  // Two of four above: not a strict majority.
  Vector cur = st.var;
  cur(0) = cur(1) = 5e-5;
  EXPECT_FALSE(discretion_signal(spec, st, cur));
  cur(2) = 5e-5;
  EXPECT_TRUE(discretion_signal(spec, st, cur));
}

TEST(Gjr, FitRejectsShortSeries) {
  EXPECT_THROW(fit_gjr(Vector::Zero(50), 0.05), DimensionError);
}

TEST(Dcc, NormalizationHasUnitDiagonal) {
  Matrix d(2, 2);
  d << 4.0, 1.0, 1.0, 9.0;
  const Matrix c = dcc_normalize(d);
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0);
  EXPECT_NEAR(c(0, 1), 1.0 / 6.0, 1e-15);
}

TEST(Simulation, ReproducibleBySeed) {
  GarchSpec spec{{GjrGarch{4e-5, 0.05, 0.1, 0.85, 0.05}, GjrGarch{4e-5, 0.05, 0.1, 0.85, 0.05}}, 0.05, kWeek};
  DccSpec dcc;
  dcc.beta1 = 0.05;
  dcc.beta2 = 0.9;
  dcc.uncond_corr = Matrix::Identity(2, 2);
  dcc.uncond_corr(0, 1) = dcc.uncond_corr(1, 0) = 0.3;
  const auto st = stationary_state(spec, dcc);
  const auto a = simulate_paths(spec, dcc, st, 20, 8, 42, Measure::physical);
  const auto b = simulate_paths(spec, dcc, st, 20, 8, 42, Measure::physical);
  const auto c = simulate_paths(spec, dcc, st, 20, 8, 43, Measure::physical);
  for (std::size_t p = 0; p < a.size(); ++p) EXPECT_EQ(a[p].log_returns, b[p].log_returns);
  EXPECT_NE(a[0].log_returns, c[0].log_returns);
}

TEST(Simulation, RiskNeutralDriftIsTheRate) {
  // Constant variance: E[exp(r_t)] = exp(rate * period) each step.
  GarchSpec spec{{GjrGarch{1e-3, 0.0, 0.0, 0.0, 0.2}}, 0.05, kWeek};
  DccSpec dcc;
  dcc.uncond_corr = Matrix::Identity(1, 1);
  const auto sims = simulate_risk_neutral(spec, dcc, stationary_state(spec, dcc), 1, 200000, 3);
  Eigen::ArrayXd g(static_cast<Index>(sims.size()));
  for (std::size_t p = 0; p < sims.size(); ++p) g(static_cast<Index>(p)) = std::exp(sims[p].log_returns(0, 0));
  const double se = std::sqrt((g - g.mean()).square().mean() / g.size());
  EXPECT_LT(std::abs(g.mean() - std::exp(0.05 * kWeek)), 4.0 * se);
}
