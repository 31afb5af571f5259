#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"

using namespace covaropt;

TEST(Hedging, NoOptionsGivesStockCorrelations) {
  const Instance inst = generate_instance(4, 0, 1);
  const HedgeResult r = zero_correlation_weights(inst.model, OptionMenu(4));
  double expect = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = i + 1; j < 4; ++j) expect += std::abs(inst.correlation(i, j));
  EXPECT_NEAR(r.mean_abs_correlation, expect / 6.0, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(Hedging, TwoOptionsPerStockNeutralizeEverything) {
  const Instance inst = generate_instance(5, 10, 2, kWeek, 0.05, true);
  const HedgeResult r = zero_correlation_weights(inst.model, inst.menu());
  EXPECT_LT(r.mean_abs_correlation, 1e-10);
  for (const auto& a : r.assets) EXPECT_NEAR(a.budget_residual(inst.menu()[static_cast<std::size_t>(a.stock)]), 0.0, 1e-12);
}

TEST(Hedging, SingleOptionsReduceCorrelation) {
  const Instance inst = generate_instance(4, 4, 3, kWeek, 0.05, true);
  const HedgeResult none = zero_correlation_weights(inst.model, OptionMenu(4));
  const HedgeResult one = zero_correlation_weights(inst.model, inst.menu());
  EXPECT_LT(one.mean_abs_correlation, none.mean_abs_correlation);
  for (const auto& a : one.assets) EXPECT_NEAR(a.budget_residual(inst.menu()[static_cast<std::size_t>(a.stock)]), 0.0, 1e-12);
}

TEST(Hedging, CurveIsNonincreasing) {
  const Instance inst = generate_instance(6, 12, 4, kWeek, 0.05, true);
  const auto curve = correlation_hedging_curve(inst.model, inst.menu(), 12);
  ASSERT_EQ(curve.size(), 13u);
  for (std::size_t k = 1; k < curve.size(); ++k)
    EXPECT_LE(curve[k].mean_abs_correlation, curve[k - 1].mean_abs_correlation + 1e-12);
  EXPECT_LT(curve.back().mean_abs_correlation, 0.05);
}
