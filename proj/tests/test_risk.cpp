#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"
#include "oracles.hpp"

using namespace covaropt;

TEST(StockCovar, MatchesClosedFormOracle) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const Index m = 2 + k % 5;
    const MarketModel model = oracle::random_model(m, rng);
    const DistressEvent ev = DistressEvent::at_var(model, oracle::random_subset(m, rng), 0.95);
    const Vector y = Vector::Random(m);
    EXPECT_NEAR(stock_covar(model, ev, y, 0.95), oracle::covar_closed_form(model, ev, y, 0.95), 1e-10);
  }
}

TEST(StockCovar, TwoAssetPsi) {
  // Equal unit-variance zero-mean stocks, hold one unit of stock 2.
  for (double rho : {-0.5, 0.0, 0.3, 0.9}) {
    Matrix s(2, 2);
    s << 1.0, rho, rho, 1.0;
    const MarketModel m(Vector::Ones(2), Vector::Zero(2), s, 1.0);
    const double cv = stock_covar(m, DistressEvent::at_var(m, {0}, 0.9), Vector{{0.0, 1.0}}, 0.95);
    EXPECT_NEAR(cv, two_asset_psi(rho, 0.9, 0.95), 1e-12);
  }
  EXPECT_THROW(two_asset_psi(1.5, 0.9, 0.95), DomainError);
}

TEST(StockCovar, RejectsBadConfidence) {
  const MarketModel m(Vector::Ones(2), Vector::Zero(2), Matrix::Identity(2, 2), 1.0);
  const auto ev = DistressEvent::at_var(m, {0}, 0.95);
  EXPECT_THROW(stock_covar(m, ev, Vector::Ones(2), 1.0), DomainError);
  EXPECT_THROW(stock_covar(m, ev, Vector::Ones(3), 0.95), DimensionError);
}

TEST(Moments, StockOnlyReducesToGaussian) {
  std::mt19937_64 rng(6);
  const MarketModel model = oracle::random_model(4, rng);
  const DistressEvent ev = DistressEvent::at_var(model, {1}, 0.95);
  const Vector y = Vector::Random(4);
  const ConditionalMoments cm = conditional_moments(model, ev, {}, Portfolio::stocks(y));
  EXPECT_NEAR(covar_normal_approx(cm, 0.95), stock_covar(model, ev, y, 0.95), 1e-12);
  EXPECT_GT(covar_worst_case(cm, 0.95), covar_normal_approx(cm, 0.95));
  const UnconditionalMoments um = unconditional_moments(model, {}, Portfolio::stocks(y));
  EXPECT_NEAR(um.mean, model.mu().dot(y), 1e-15);
  EXPECT_NEAR(um.variance, y.dot(model.sigma() * y), 1e-15);
}

TEST(Moments, UnconditionalMatchesMonteCarlo) {
  const Instance inst = generate_instance(3, 6, 21);
  Portfolio pf{Vector{{0.5, -0.3, 0.2}}, Vector{{3.0, -2.0, 4.0, 1.0, -1.0, 2.0}}};
  const UnconditionalMoments um = unconditional_moments(inst.model, inst.greeks(), pf);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  const Matrix l = inst.model.sigma().llt().matrixL();
  const int n = 400000;
  Eigen::ArrayXd v(n);
  const auto greeks = inst.greeks();
  for (int s = 0; s < n; ++s) {
    Vector z(3);
    for (Index i = 0; i < 3; ++i) z(i) = g(rng);
    const Vector dp = inst.model.mu() + l * z;
    double val = pf.y.dot(dp);
    for (std::size_t o = 0; o < greeks.size(); ++o)
      val += pf.x(static_cast<Index>(o)) * (greeks[o].theta * inst.model.dt() + greeks[o].delta.dot(dp) +
                                            0.5 * dp.dot(greeks[o].gamma * dp));
    v(s) = val;
  }
  const double mean = v.mean();
  const double var = (v - mean).square().sum() / (n - 1);
  EXPECT_LT(std::abs(um.mean - mean), 4.0 * std::sqrt(var / n));
  EXPECT_NEAR(um.variance / var, 1.0, 0.02);
}

TEST(Spectral, ValueReproducesDeltaGammaChange) {
  const Instance inst = generate_instance(4, 8, 31);
  Portfolio pf{Vector{{0.2, 0.1, -0.3, 0.4}}, Vector::LinSpaced(8, -3.0, 3.0)};
  const auto law = conditional_law(inst.model, DistressEvent::at_var(inst.model, {0}, 0.95));
  const QuadFormSpectral qf = spectral_reform(inst.model, law, inst.greeks(), pf);
  const auto cm = conditional_moments(inst.model, DistressEvent::at_var(inst.model, {0}, 0.95), inst.greeks(), pf);
  EXPECT_NEAR(qf.mean(), cm.mean, 1e-12 * std::abs(cm.mean) + 1e-15);
  EXPECT_NEAR(qf.variance(), cm.variance, 1e-9 * cm.variance);
  EXPECT_GE(qf.dominance_ratio(), 0.0);
}

TEST(Spectral, MonteCarloOraclesAgree) {
  const Instance inst = generate_instance(4, 8, 41);
  Portfolio pf{Vector{{0.2, 0.1, -0.3, 0.4}}, Vector::LinSpaced(8, -3.0, 3.0)};
  const auto ev = DistressEvent::at_var(inst.model, {2}, 0.95);
  const auto law = conditional_law(inst.model, ev);
  const QuadFormSpectral qf = spectral_reform(inst.model, law, inst.greeks(), pf);
  const auto a = covar_mc_oracle(qf, 0.95, 200000, 1);
  const auto b = covar_mc_oracle(inst.model, law, inst.greeks(), pf, 0.95, 200000, 2);
  EXPECT_LT(std::abs(a.value - b.value), 4.0 * std::hypot(a.std_error, b.std_error));
  EXPECT_THROW(covar_mc_oracle(qf, 0.95, 100, 1), DomainError);
  // Same seed, same answer regardless of scheduling.
  EXPECT_EQ(covar_mc_oracle(qf, 0.95, 50000, 9).value, covar_mc_oracle(qf, 0.95, 50000, 9).value);
}

TEST(OptionedCorrelation, ShrinksTowardZeroAndMatchesFormula) {
  Matrix s(2, 2);
  s << 0.04, 0.012, 0.012, 0.09;
  const Vector mu{{0.01, -0.02}};
  OptionedAsset a, b;
  a.stock = 0;
  b.stock = 1;
  a.delta = 0.7;
  a.gamma = 3.0;
  b.delta = -0.4;
  b.gamma = 1.5;
  const double expect = (0.7 + 3.0 * 0.01) * (-0.4 + 1.5 * -0.02) * 0.012 + 0.5 * 3.0 * 1.5 * 0.012 * 0.012;
  EXPECT_NEAR(optioned_asset_covariance(a, b, mu, s), expect, 1e-16);
  EXPECT_LE(std::abs(optioned_asset_correlation(a, b, mu, s)), 0.2 + 1e-15);
  a.delta = 0.0;
  a.gamma = 0.0;
  EXPECT_EQ(optioned_asset_correlation(a, b, mu, s), 0.0);
}
