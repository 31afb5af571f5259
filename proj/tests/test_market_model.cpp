#include <gtest/gtest.h>

#include "covaropt/covaropt.hpp"
#include "oracles.hpp"

using namespace covaropt;

TEST(MarketModel, RejectsBadInputs) {
  EXPECT_THROW(MarketModel(Vector::Ones(2), Vector::Zero(3), Matrix::Identity(2, 2), 1.0), DimensionError);
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(MarketModel(Vector::Ones(2), Vector::Zero(2), bad, 1.0), DomainError);
  EXPECT_THROW(MarketModel(Vector{{1.0, -1.0}}, Vector::Zero(2), Matrix::Identity(2, 2), 1.0), DomainError);
  EXPECT_THROW(MarketModel(Vector::Ones(2), Vector::Zero(2), Matrix::Identity(2, 2), 0.0), DomainError);
}

TEST(MarketModel, AssetVar) {
  Matrix s(1, 1);
  s << 0.04;
  const MarketModel m(Vector::Ones(1), Vector::Constant(1, 0.01), s, 1.0);
  EXPECT_NEAR(asset_var(m, 0, 0.95), 1.6448536269514722 * 0.2 - 0.01, 1e-12);
  EXPECT_THROW(asset_var(m, 0, 1.0), DomainError);
}

TEST(ConditionalLaw, MatchesPrecisionMatrixConditioning) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const MarketModel model = oracle::random_model(6, rng);
    const DistressEvent ev = DistressEvent::at_var(model, oracle::random_subset(6, rng), 0.95);
    const ConditionalLaw law = conditional_law(model, ev);
    const auto ref = oracle::condition_by_precision(model.mu(), model.sigma(), ev.distressed(), -ev.losses());
    EXPECT_LT((law.cond_mean - ref.mean).norm(), 1e-10 * (1.0 + ref.mean.norm()));
    EXPECT_LT((law.cond_cov - ref.cov).norm(), 1e-10 * ref.cov.norm());
    for (std::size_t a = 0; a < ev.distressed().size(); ++a)
      EXPECT_EQ(law.stacked(ev.distressed()[a]), -ev.losses()(static_cast<Index>(a)));
  }
}

TEST(ConditionalLaw, SingularDistressBlockIsRejected) {
  Matrix s(3, 3);
  s << 1.0, 1.0 - 1e-12, 0.1, 1.0 - 1e-12, 1.0, 0.1, 0.1, 0.1, 1.0;
  const MarketModel m(Vector::Ones(3), Vector::Zero(3), s, 1.0);
  EXPECT_THROW(conditional_law(m, DistressEvent::with_losses(3, {0, 1}, Vector::Ones(2))), SingularMatrixError);
  EXPECT_NO_THROW(conditional_law(m, DistressEvent::with_losses(3, {0}, Vector::Ones(1))));
}

TEST(Estimation, RecoversMomentsOfDeterministicPanel) {
  // Alternating log returns +-a give mean 0 and variance a^2 n/(n-1).
  const int n = 101;
  Matrix prices(n, 1);
  prices(0, 0) = 1.0;
  for (int t = 1; t < n; ++t) prices(t, 0) = prices(t - 1, 0) * std::exp(t % 2 ? 0.02 : -0.02);
  const MarketModel m = estimate_from_prices(prices, kWeek, kWeek);
  const double last = prices(n - 1, 0);
  EXPECT_NEAR(m.mu()(0), 0.0, 1e-15);
  EXPECT_NEAR(m.sigma()(0, 0), last * last * 0.0004 * 100.0 / 99.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.prices()(0), last);
}
