#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"
#include "oracles.hpp"

using namespace covaropt;

TEST(BlackScholes, PriceMatchesNumericalIntegral) {
  for (double k : {0.8, 1.0, 1.25})
    for (double vol : {0.1, 0.3})
      for (OptionKind kind : {OptionKind::call, OptionKind::put}) {
        const double p = bs_price_and_greeks(1.0, k, vol, 0.05, 1.5, kind).price;
        EXPECT_NEAR(p, oracle::bs_integral(1.0, k, vol, 0.05, 1.5, kind == OptionKind::call), 1e-9);
      }
}

TEST(BlackScholes, PutCallParityAndGreeks) {
  const double s = 1.1, k = 1.0, v = 0.25, r = 0.03, t = 0.7;
  const auto c = bs_price_and_greeks(s, k, v, r, t, OptionKind::call);
  const auto p = bs_price_and_greeks(s, k, v, r, t, OptionKind::put);
  EXPECT_NEAR(c.price - p.price, s - k * std::exp(-r * t), 1e-14);
  EXPECT_NEAR(c.delta - p.delta, 1.0, 1e-14);
  EXPECT_NEAR(c.gamma, p.gamma, 1e-14);
  const double h = 1e-4;
  auto price = [&](double spot, double tau) { return bs_price_and_greeks(spot, k, v, r, tau, OptionKind::call).price; };
  EXPECT_NEAR(c.delta, (price(s + h, t) - price(s - h, t)) / (2 * h), 1e-8);
  EXPECT_NEAR(c.gamma, (price(s + h, t) - 2 * price(s, t) + price(s - h, t)) / (h * h), 1e-5);
  EXPECT_NEAR(c.theta, -(price(s, t + h) - price(s, t - h)) / (2 * h), 1e-7);
}

TEST(BlackScholes, RejectsInvalidInputs) {
  EXPECT_THROW(bs_price_and_greeks(-1.0, 1.0, 0.2, 0.0, 1.0, OptionKind::call), DomainError);
  EXPECT_THROW(bs_price_and_greeks(1.0, 1.0, 0.0, 0.0, 1.0, OptionKind::call), DomainError);
}

TEST(FiniteDifference, AgreesWithAnalyticGreeks) {
  const SpotPricer pricer = [](double s, double tau) {
    return bs_price_and_greeks(s, 1.0, 0.2, 0.05, tau, OptionKind::put).price;
  };
  const auto fd = finite_diff_greeks(pricer, 1.0, 1.0);
  const auto an = bs_price_and_greeks(1.0, 1.0, 0.2, 0.05, 1.0, OptionKind::put);
  EXPECT_NEAR(fd.price, an.price, 1e-15);
  EXPECT_NEAR(fd.delta, an.delta, 1e-4);
  EXPECT_NEAR(fd.gamma, an.gamma, 1e-2);
  EXPECT_NEAR(fd.theta, an.theta, 2e-3);
}

TEST(Lsmc, AmericanPutBenchmark) {
  // Standard benchmark: S=36, K=40, vol 0.2, r 0.06, T=1; finite-difference value 4.478.
  OptionContract c;
  c.kind = OptionKind::put;
  c.style = ExerciseStyle::american;
  c.strike = 40.0;
  c.expiry = 1.0;
  const McPrice am = lsmc_american(50000, 50, GbmDynamics{0.2, 0.06}, c, 36.0, 11);
  EXPECT_NEAR(am.price, 4.478, 0.05);
  EXPECT_TRUE(am.warning.empty());
  c.style = ExerciseStyle::european;
  const McPrice eu = lsmc_american(50000, 50, GbmDynamics{0.2, 0.06}, c, 36.0, 11);
  const double bs = bs_price_and_greeks(36.0, 40.0, 0.2, 0.06, 1.0, OptionKind::put).price;
  EXPECT_LT(std::abs(eu.price - bs), 4.0 * eu.std_error);
  EXPECT_GT(am.price, eu.price);
}

TEST(Lsmc, WarnsOnFewPathsAndIsSeedReproducible) {
  OptionContract c;
  c.kind = OptionKind::put;
  c.style = ExerciseStyle::american;
  const McPrice a = lsmc_american(500, 10, GbmDynamics{0.2, 0.05}, c, 1.0, 5);
  const McPrice b = lsmc_american(500, 10, GbmDynamics{0.2, 0.05}, c, 1.0, 5);
  EXPECT_FALSE(a.warning.empty());
  EXPECT_EQ(a.price, b.price);
}

std::vector<OptionLeg> legs_for(double spot, std::initializer_list<std::pair<double, OptionKind>> spec,
                                std::vector<double> vols = {}) {
  std::vector<OptionLeg> legs;
  std::size_t i = 0;
  for (const auto& [k, kind] : spec) {
    const double vol = i < vols.size() ? vols[i] : 0.25;
    ++i;
    const auto g = bs_price_and_greeks(spot, k, vol, 0.05, 1.0, kind);
    legs.push_back({g.price, g.delta, g.gamma, g.theta});
  }
  return legs;
}

TEST(OptionedAsset, DeltaGammaNeutralWithTwoOptions) {
  const auto legs = legs_for(1.0, {{0.9, OptionKind::put}, {1.1, OptionKind::call}});
  const OptionedAsset a = make_optioned_asset(0, 1.0, legs, OptionedTargets::neutral());
  EXPECT_NEAR(a.delta, 0.0, 1e-12);
  EXPECT_NEAR(a.gamma, 0.0, 1e-12);
  EXPECT_NEAR(a.budget_residual(legs), 0.0, 1e-12);
}

TEST(OptionedAsset, ThetaTarget) {
  OptionedTargets t{0.0, 0.0, 0.0};
  const auto two = legs_for(1.0, {{0.9, OptionKind::put}, {1.1, OptionKind::call}});
  EXPECT_THROW(make_optioned_asset(0, 1.0, two, t), InfeasibleSystemError);
  // Under one volatility the pricing equation ties theta to price, delta
  // and gamma, so theta = r * price is forced.
  const auto flat = legs_for(1.0, {{0.9, OptionKind::put}, {1.0, OptionKind::call}, {1.2, OptionKind::call}});
  EXPECT_THROW(make_optioned_asset(0, 1.0, flat, t), InfeasibleSystemError);
  const OptionedAsset forced = make_optioned_asset(0, 1.0, flat, OptionedTargets{0.0, 0.0, 0.05});
  EXPECT_NEAR(forced.theta, 0.05, 1e-10);
  // With a smile the theta row is independent.
  const auto smile = legs_for(1.0, {{0.9, OptionKind::put}, {1.0, OptionKind::call}, {1.2, OptionKind::call}},
                              {0.3, 0.25, 0.2});
  const OptionedAsset a = make_optioned_asset(0, 1.0, smile, t);
  EXPECT_NEAR(a.theta, 0.0, 1e-10);
  EXPECT_NEAR(a.delta, 0.0, 1e-12);
  EXPECT_NEAR(a.gamma, 0.0, 1e-12);
}

TEST(OptionedAsset, NoShortStockGuard) {
  const auto legs = legs_for(1.0, {{0.8, OptionKind::put}, {0.9, OptionKind::put}, {1.2, OptionKind::call}});
  const OptionedAsset free = make_optioned_asset(0, 1.0, legs, OptionedTargets::neutral());
  const OptionedAsset guarded = make_optioned_asset(0, 1.0, legs, OptionedTargets::neutral(), true);
  EXPECT_GE(guarded.stock_amount, 0.0);
  EXPECT_NEAR(guarded.delta, 0.0, 1e-10);
  if (free.stock_amount >= 0.0) {
    EXPECT_NEAR(free.stock_amount, guarded.stock_amount, 1e-12);
  }
}

TEST(OptionedAsset, PlainStockIsTheDefault) {
  const OptionedAsset a = make_optioned_asset(2, 3.0, {}, OptionedTargets{});
  EXPECT_NEAR(a.stock_amount, 1.0, 1e-14);
  EXPECT_NEAR(a.delta, 1.0, 1e-14);
}
