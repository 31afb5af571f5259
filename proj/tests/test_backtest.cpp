#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"

using namespace covaropt;

TEST(Sia, ClustersPickMostConnectedMember) {
  Matrix c = Matrix::Identity(4, 4);
  c(0, 1) = c(1, 0) = 0.9;
  c(2, 3) = c(3, 2) = 0.8;
  c(0, 2) = c(2, 0) = 0.2;
  c(1, 3) = c(3, 1) = 0.1;
  const auto groups = correlation_clusters(c, 2);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(identify_sia(c, 2), (IndexSet{0, 2}));
  EXPECT_EQ(identify_sia(c, 2, Vector{{0.0, 1.0, 0.0, 1.0}}), (IndexSet{1, 3}));
  EXPECT_THROW(identify_sia(c, 5), DomainError);
}

TEST(Scenario, MidpointHasNoDistressMove) {
  const Instance inst = generate_instance(4, 4, 2);
  const auto ev = DistressEvent::at_var(inst.model, {0, 1}, 0.95);
  Portfolio stock{Vector::Constant(4, 0.25), Vector::Zero(4)};
  const auto rows = scenario_sweep(inst.model, ev, inst.greeks(), {stock});
  ASSERT_EQ(rows.size(), 51u);
  EXPECT_NEAR(rows[25].lambda, 0.5, 1e-15);
  EXPECT_NEAR(rows[25].dp(0), 0.0, 1e-15);
  EXPECT_NEAR(rows[0].dp(0), -ev.losses()(0), 1e-15);
  EXPECT_NEAR(rows[50].dp(1), ev.losses()(1), 1e-15);
  for (const auto& r : rows) EXPECT_NEAR(r.values(0), stock.y.dot(r.dp), 1e-15);
}

TEST(Metrics, HandComputedSeries) {
  const Vector r{{0.1, -0.2, 0.05, 0.0}};
  const PerformanceMetrics pm = performance_metrics(r, 0.0);
  EXPECT_NEAR(pm.mean, -0.0125, 1e-15);
  EXPECT_NEAR(pm.min, -0.2, 1e-15);
  // Values 1, 1.1, 0.88, 0.924, 0.924; drawdowns 0, 0, 0.2, 0.16, 0.16.
  EXPECT_NEAR(pm.max_drawdown, 0.2, 1e-12);
  EXPECT_NEAR(pm.add, (0.0 + 0.2 + 0.16 + 0.16) / 4.0, 1e-12);
  ASSERT_TRUE(pm.up_ratio.has_value());
  EXPECT_NEAR(*pm.up_ratio, (0.15 / 4.0) / std::sqrt(0.04 / 4.0), 1e-12);
  ASSERT_TRUE(pm.ds_ratio.has_value());
}

TEST(Metrics, UndefinedRatiosAreEmpty) {
  const PerformanceMetrics pm = performance_metrics(Vector::Constant(5, 0.01), 0.0);
  EXPECT_FALSE(pm.up_ratio.has_value());
  EXPECT_FALSE(pm.ds_ratio.has_value());
}

namespace {
BacktestFeed small_feed(double spread) {
  GarchSpec spec;
  for (int i = 0; i < 4; ++i) spec.stocks.push_back(GjrGarch{4e-5, 0.04, 0.1, 0.86, 0.05});
  DccSpec dcc;
  dcc.beta1 = 0.03;
  dcc.beta2 = 0.95;
  dcc.uncond_corr = Matrix::Constant(4, 4, 0.4);
  dcc.uncond_corr.diagonal().setOnes();
  FeedConfig cfg;
  cfg.stocks = 4;
  cfg.history = 60;
  cfg.horizon = 12;
  cfg.spread = spread;
  return simulate_feed(spec, dcc, cfg, 77);
}
}  // namespace

TEST(Backtest, SelfFinancingAndCostsOff) {
  const BacktestFeed feed = small_feed(0.0);
  Strategy s = Strategy::optioned_control(0.01);
  s.n_sia = 2;
  const auto a = run_backtest(s, feed, true);
  const auto b = run_backtest(s, feed, false);
  EXPECT_EQ(a.values, b.values);
  ASSERT_EQ(a.values.size(), 13);
  EXPECT_EQ(a.values(0), 1.0);
  for (std::size_t w = 0; w < a.weeks.size(); ++w) {
    const auto& wk = a.weeks[w];
    double book = feed.prices.row(wk.week).dot(wk.y) + wk.cash;
    for (const auto& [k, x] : wk.x) book += x * feed.options[k].ask(wk.week);
    EXPECT_NEAR(book, a.values(static_cast<Index>(w)), 1e-12);
  }
}

TEST(Backtest, SpreadCostsLowerWealth) {
  const BacktestFeed feed = small_feed(0.2);
  Strategy s = Strategy::optioned();
  s.n_sia = 2;
  const auto with = run_backtest(s, feed, true);
  const auto without = run_backtest(s, feed, false);
  EXPECT_LT(with.values(1), without.values(1) + 1e-12);
}

TEST(Backtest, StrategyValidation) {
  Strategy s = Strategy::stock_control();
  s.risk_on.rho_bar.reset();
  EXPECT_THROW(s.validate(), DomainError);
  Strategy d = Strategy::discretion_stock();
  d.risk_off.reset();
  EXPECT_THROW(d.validate(), DomainError);
}
