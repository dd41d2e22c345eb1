#include <gtest/gtest.h>

#include <cstring>

#include "acgan/backtest.hpp"
#include "acgan/synthetic.hpp"

using namespace acgan;

namespace {

PriceMatrix market(Index assets, Index days, std::uint64_t seed) {
  GbmConfig g;
  g.assets = assets;
  g.days = days;
  g.seed = seed;
  return simulate_gbm(g);
}

}  // namespace

TEST(Rebalance, Schedule) {
  const auto d = rebalance_days(800, 40, 20);
  ASSERT_EQ(d.size(), 38u);
  EXPECT_EQ(d.front(), 41u);
  EXPECT_EQ(d.back(), 781u);
  EXPECT_EQ(rebalance_days(100, 40, 10).size(), 6u);
  EXPECT_THROW(rebalance_days(45, 40, 10), ConfigError);
  EXPECT_THROW(rebalance_days(100, 40, 0), ConfigError);
}

TEST(Backtest, BuyAndHoldFollowsPrice) {
  const PriceMatrix x = market(3, 200, 1);
  for (std::size_t a = 0; a < 3; ++a) {
    const BacktestReport r = buy_and_hold(x, a, 40);
    ASSERT_EQ(r.equity.size(), 161);
    EXPECT_EQ(r.equity(0), 1.0);
    EXPECT_EQ(r.label, x.tickers[a]);
    for (Index t = 0; t < r.equity.size(); ++t) {
      EXPECT_NEAR(r.equity(t), x.values(static_cast<Index>(a), 39 + t) / x.values(static_cast<Index>(a), 39), 1e-12);
    }
  }
}

TEST(Backtest, SingleAssetWeightUnderRebalancingMatchesBuyAndHold) {
  const PriceMatrix x = market(3, 200, 2);
  const BacktestReport r = backtest_fixed(x, Vector::Unit(3, 1), 40, 10, "fixed");
  const BacktestReport b = buy_and_hold(x, 1, 40);
  EXPECT_LE((r.equity - b.equity).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.weights.size(), 16u);
}

TEST(Backtest, SingleRebalanceIsOneShotAllocation) {
  const PriceMatrix x = market(4, 150, 9);
  Vector w(4);
  w << 0.1, 0.4, 0.2, 0.3;
  const BacktestReport r = backtest_fixed(x, w, 40, 110, "once");
  ASSERT_EQ(r.weights.size(), 1u);
  ASSERT_EQ(r.equity.size(), 111);
  for (Index d = 0; d < r.equity.size(); ++d) {
    double v = 0.0;
    for (Index a = 0; a < 4; ++a) v += w(a) * x.values(a, 39 + d) / x.values(a, 39);
    EXPECT_NEAR(r.equity(d), v, 1e-12);
  }
}

TEST(Backtest, FlatMarket) {
  PriceMatrix x = market(3, 120, 3);
  x.values.setConstant(25.0);
  for (const BacktestReport& r :
       {backtest_markowitz(x, 40, 10), backtest_fixed(x, equal_weights(3), 40, 10, "equal")}) {
    EXPECT_TRUE((r.equity.array() == 1.0).all()) << r.label;
    EXPECT_FALSE(r.sharpe) << r.label;
    EXPECT_EQ(r.sharpe.missing, "undefined-statistic");
    EXPECT_EQ(r.annual_return, 0.0);
  }
}

TEST(Backtest, DriftBetweenRebalances) {
  PriceMatrix x = market(2, 6, 4);
  x.values << 1, 1, 1, 2, 2, 2,
              1, 1, 1, 1, 1, 1;
  // h = 2: weights struck on day 2 close, held from day 3; rebalance day 5 only.
  const BacktestReport r = backtest_fixed(x, equal_weights(2), 2, 2, "half");
  ASSERT_EQ(r.equity.size(), 5);
  EXPECT_DOUBLE_EQ(r.equity(1), 1.0);
  EXPECT_DOUBLE_EQ(r.equity(2), 1.5);
  EXPECT_DOUBLE_EQ(r.equity(4), 1.5);
  ASSERT_EQ(r.weights.size(), 2u);
  EXPECT_EQ(r.weights[1].day, 5u);
}

TEST(Backtest, MarkowitzUsesTrailingHistory) {
  const PriceMatrix x = market(3, 160, 5);
  const BacktestReport r = backtest_markowitz(x, 40, 20);
  ASSERT_EQ(r.weights.size(), 6u);
  for (const AllocationWeights& w : r.weights) {
    const Index first = static_cast<Index>(w.day) - 41;
    const AllocationWeights expect = max_sharpe(estimate_returns(x.values.middleCols(first, 40)));
    EXPECT_EQ(w.weights, expect.weights);
    EXPECT_NEAR(w.weights.sum(), 1.0, 1e-9);
  }
  EXPECT_TRUE((r.equity.array() > 0.0).all());
}

TEST(Backtest, ScheduleLengthMismatch) {
  const PriceMatrix x = market(2, 100, 6);
  EXPECT_THROW(run_backtest(x, {}, 40, 10, "empty"), AlignmentError);
}

TEST(MeanWeights, IdenticalDrawsAndConvexity) {
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  const std::vector<std::optional<Vector>> same(5, w);
  EXPECT_EQ(mean_weights(same).value(), w);

  Vector u(3);
  u << 1.0, 0.0, 0.0;
  const std::vector<std::optional<Vector>> mixed{w, std::nullopt, u};
  const Vector m = mean_weights(mixed).value();
  EXPECT_NEAR(m.sum(), 1.0, 1e-12);
  EXPECT_GE(m.minCoeff(), 0.0);
  EXPECT_NEAR(m(0), 0.6, 1e-12);
  EXPECT_FALSE(mean_weights({std::nullopt, std::nullopt}));
}

TEST(ScenarioBacktest, OneDrawEqualsManyIdenticalDraws) {
  ScenarioSet one;
  one.reference = market(3, 140, 7);
  one.window = WindowConfig{40, 20};
  one.draws = {market(3, 140, 8).values};
  ScenarioSet five = one;
  five.draws.assign(5, one.draws[0]);
  const ScenarioBacktest a = backtest_scenarios(one, 10, "acgan"), b = backtest_scenarios(five, 10, "acgan");
  ASSERT_EQ(a.mean.equity.size(), b.mean.equity.size());
  EXPECT_EQ(std::memcmp(a.mean.equity.data(), b.mean.equity.data(), sizeof(double) * a.mean.equity.size()), 0);
  EXPECT_EQ(b.per_draw.size(), 5u);
  EXPECT_EQ(a.per_draw[0].equity, a.mean.equity);
}

TEST(ScenarioBacktest, UsesForwardBlock) {
  const Tensor y = market(2, 100, 9).values;
  const Tensor blk = forward_block(y, 41, 10);
  EXPECT_EQ(blk.cols(), 10);
  EXPECT_EQ(blk, y.middleCols(40, 10));
  EXPECT_EQ(forward_block(y, 100, 10).cols(), 3);
}
