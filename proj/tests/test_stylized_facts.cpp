#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "acgan/scenarios.hpp"
#include "acgan/stylized_facts.hpp"
#include "acgan/synthetic.hpp"
#include "oracles.hpp"

using namespace acgan;

namespace {

Vector normals(Index n, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

Vector pareto(Index n, double alpha, std::uint64_t seed) {
  CounterRng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::pow(rng.uniform_open_low(), -1.0 / (alpha - 1.0));
  return v;
}

}  // namespace

TEST(LogReturns, ExactLogs) {
  Vector p(3);
  p << 1.0, std::numbers::e, std::numbers::e * std::numbers::e;
  const Vector r = log_returns(p);
  ASSERT_EQ(r.size(), 2);
  EXPECT_NEAR(r(0), 1.0, 1e-15);
  EXPECT_NEAR(r(1), 1.0, 1e-15);
  EXPECT_TRUE(log_returns(Vector::Constant(5, 42.0)).isZero(0.0));
  EXPECT_THROW(log_returns(Vector::Constant(1, 1.0)), InsufficientData);
  p(1) = 0.0;
  EXPECT_THROW(log_returns(p), DomainError);
}

TEST(LogReturns, MatchesLongDoubleRecomputation) {
  Vector p(400);
  CounterRng rng(2);
  p(0) = 50.0;
  for (Index t = 1; t < p.size(); ++t) p(t) = p(t - 1) * std::exp(0.02 * rng.normal());
  const Vector r = log_returns(p);
  for (Index t = 0; t < r.size(); ++t) {
    const long double expect = std::log(static_cast<long double>(p(t + 1))) - std::log(static_cast<long double>(p(t)));
    EXPECT_NEAR(r(t), static_cast<double>(expect), 1e-14);
  }
}

TEST(Autocorrelation, Alternating) {
  Vector r(100);
  for (Index t = 0; t < r.size(); ++t) r(t) = t % 2 ? -1.0 : 1.0;
  EXPECT_DOUBLE_EQ(autocorrelation(r, 1), -1.0);
  EXPECT_DOUBLE_EQ(autocorrelation(r, 2), 1.0);
  const Vector x = normals(300, 3);
  EXPECT_EQ(autocorrelation(x, 0), 1.0);
}

TEST(Autocorrelation, IidIsSmall) {
  const Vector r = normals(10000, 4);
  for (Index k = 1; k <= 10; ++k) EXPECT_LT(std::abs(autocorrelation(r, k)), 0.05) << k;
}

TEST(Autocorrelation, Errors) {
  EXPECT_THROW(autocorrelation(Vector::Constant(50, 0.01), 1), UndefinedStatistic);
  EXPECT_THROW(autocorrelation(normals(3, 1), 2), InsufficientData);
  EXPECT_THROW(autocorrelation(normals(30, 1), -1), ParameterError);
}

TEST(Statistics, MatchDirectFormulas) {
  const Vector a = normals(1000, 5, 0.01), b = normals(1000, 6, 0.02);
  const auto sa = oracle::from(a), sb = oracle::from(b);
  for (Index k = 0; k <= 10; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    EXPECT_LE(oracle::rel_diff(autocorrelation(a, k), oracle::autocorr(sa, ku)), 1e-10);
    EXPECT_LE(oracle::rel_diff(leverage_effect(a, k), oracle::leverage(sa, sa, ku)), 1e-10);
    EXPECT_LE(oracle::rel_diff(cross_correlation(a, b, k), oracle::cross_corr(sa, sb, ku)), 1e-10);
    EXPECT_LE(oracle::rel_diff(volatility_correlation(a, b, k),
                               oracle::cross_corr(oracle::abs(sa), oracle::abs(sb), ku)),
              1e-10);
    EXPECT_LE(oracle::rel_diff(cross_leverage(a, b, k), oracle::leverage(sa, sb, ku)), 1e-10);
  }
  for (long k = -3; k <= 3; ++k) {
    EXPECT_LE(oracle::rel_diff(coarse_fine_rho(a, 5, k), oracle::coarse_fine(sa, 5, k)), 1e-10) << k;
  }
  const Moments m = moments(a);
  EXPECT_LE(oracle::rel_diff(m.kurtosis, oracle::kurtosis(sa)), 1e-10);
  EXPECT_LE(oracle::rel_diff(m.skewness, oracle::skewness(sa)), 1e-10);
  EXPECT_LE(oracle::rel_diff(pearson(a, b), oracle::pearson(sa, sb)), 1e-10);
}

TEST(TailExponent, ParetoSamples) {
  const TailFit fit = tail_exponent(pareto(50000, 3.5, 7));
  EXPECT_GE(fit.alpha, 3.3);
  EXPECT_LE(fit.alpha, 3.7);
  EXPECT_TRUE(fit.plausible);
  EXPECT_GE(fit.tail_size, kMinTailPoints);
}

TEST(TailExponent, ErrorShrinksWithSampleSize) {
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    small += std::abs(tail_exponent(pareto(1000, 3.5, 100 + s)).alpha - 3.5);
    large += std::abs(tail_exponent(pareto(100000, 3.5, 200 + s)).alpha - 3.5);
  }
  EXPECT_LT(large, small);
}

TEST(TailExponent, GaussianIsNotPowerLaw) {
  const TailFit fit = tail_exponent(normals(20000, 8));
  EXPECT_GT(fit.alpha, 5.0);
  EXPECT_FALSE(fit.plausible);
  EXPECT_THROW(tail_exponent(normals(99, 8)), InsufficientData);
}

TEST(Leverage, IidIsNearZero) {
  EXPECT_LT(std::abs(leverage_effect(normals(100000, 9), 1)), 0.03);
}

TEST(Leverage, DropsFollowedByLargerMovesAreNegative) {
  CounterRng rng(10);
  Vector r(20000);
  r(0) = 0.01;
  for (Index t = 1; t < r.size(); ++t) {
    const double size = (r(t - 1) < 0.0 ? 2.0 : 1.0) * std::abs(rng.normal()) * 0.01;
    r(t) = rng.uniform() < 0.5 ? -size : size;
  }
  EXPECT_LT(leverage_effect(r, 1), 0.0);
  EXPECT_THROW(leverage_effect(Vector::Zero(20), 1), UndefinedStatistic);
}

TEST(CoarseFine, PositiveReturnsCollapse) {
  Vector r = normals(500, 11).cwiseAbs();
  const auto [coarse, fine] = coarse_fine_volatility(r, 5);
  EXPECT_LE((coarse - fine).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(coarse_fine(r, 5, 0).rho, 1.0, 1e-12);
  EXPECT_NEAR(coarse_fine(r, 5, 0).delta, 0.0, 1e-12);
}

TEST(CoarseFine, IidHasNoAsymmetry) {
  EXPECT_LT(std::abs(coarse_fine(normals(100000, 12), 5, 1).delta), 0.02);
}

TEST(Moments, GaussianAndTwoPoint) {
  const Moments g = moments(normals(1000000, 13));
  EXPECT_GE(g.kurtosis, 2.9);
  EXPECT_LE(g.kurtosis, 3.1);
  EXPECT_LE(std::abs(g.skewness), 0.05);

  Vector two(1000);
  for (Index t = 0; t < two.size(); ++t) two(t) = t % 2 ? -1.0 : 1.0;
  const Moments m = moments(two);
  EXPECT_DOUBLE_EQ(m.kurtosis, 1.0);
  EXPECT_DOUBLE_EQ(m.skewness, 0.0);

  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_GE(moments(normals(10, s)).kurtosis, 1.0 - 1e-12);
  EXPECT_THROW(moments(Vector::Constant(10, 2.0)), UndefinedStatistic);
  EXPECT_THROW(moments(normals(3, 1)), InsufficientData);
}

TEST(Pearson, Identities) {
  const Vector x = normals(1000, 14);
  EXPECT_EQ(pearson(x, x), 1.0);
  EXPECT_EQ(pearson(x, -x), -1.0);
  const Vector y = (3.7 * x.array() + 12.0).matrix();
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  const Vector z = (-0.2 * x.array() - 4.0).matrix();
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-12);
  EXPECT_THROW(pearson(x, Vector::Constant(1000, 1.0)), UndefinedStatistic);
  EXPECT_THROW(pearson(x, normals(999, 1)), DimensionError);
}

TEST(CrossStats, SelfPairAndIndependence) {
  const Vector a = normals(5000, 15);
  EXPECT_EQ(cross_correlation(a, a, 0), 1.0);
  EXPECT_EQ(volatility_correlation(a, a, 0), 1.0);

  std::vector<Vector> returns{a, normals(5000, 16), normals(5000, 17)};
  const CrossFacts c = cross_stats(returns, {"A", "B", "C"});
  ASSERT_EQ(c.pairs.size(), 3u);
  ASSERT_TRUE(c.cross_correlation);
  EXPECT_LT(std::abs(*c.cross_correlation.value), 0.02);
}

TEST(CrossStats, DegeneratePairIsExcludedWithWarning) {
  std::vector<Vector> returns{normals(500, 18), normals(500, 19), Vector::Zero(500)};
  std::vector<std::string> warnings;
  const CrossFacts c = cross_stats(returns, {"A", "B", "C"}, &warnings);
  EXPECT_EQ(warnings.size(), 2u);
  EXPECT_FALSE(c.pairs[1].cross_correlation);
  ASSERT_TRUE(c.cross_correlation);
  EXPECT_EQ(*c.cross_correlation.value, *c.pairs[0].cross_correlation.value);
  EXPECT_THROW(cross_stats({normals(10, 1)}, {"A"}), InsufficientData);
}

TEST(Evaluation, IdentityScenarios) {
  GbmConfig g;
  g.assets = 3;
  g.days = 300;
  g.seed = 20;
  ScenarioSet set;
  set.reference = simulate_gbm(g);
  set.window = WindowConfig{40, 20};
  set.draws = {set.reference.values, set.reference.values};
  const ScenarioEvaluation ev = evaluate_scenarios(set);
  ASSERT_EQ(ev.pearson.size(), 3u);
  for (const Stat& p : ev.pearson) EXPECT_EQ(p.value.value(), 1.0);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t row = 0; row < 6; ++row) {
      EXPECT_EQ(render(asset_fact(ev.real.assets[a], row)), render(asset_fact(ev.synthetic.assets[a], row)));
    }
  }
  EXPECT_EQ(render(ev.real.cross.cross_leverage), render(ev.synthetic.cross.cross_leverage));
}

TEST(Evaluation, UsesGeneratedDaysOnly) {
  GbmConfig g;
  g.assets = 2;
  g.days = 200;
  g.seed = 21;
  ScenarioSet set;
  set.reference = simulate_gbm(g);
  set.window = WindowConfig{40, 20};
  Tensor y = set.reference.values;
  y.leftCols(40) *= 3.0;  // the copied prefix never enters the statistics
  set.draws = {y};
  const ScenarioEvaluation ev = evaluate_scenarios(set);
  EXPECT_EQ(ev.pearson[0].value.value(), 1.0);
}
