#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "acgan/prices.hpp"
#include "acgan/random.hpp"
#include "acgan/windows.hpp"

using namespace acgan;

namespace {

PriceMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_prices(in);
}

template <typename E>
std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

PriceMatrix matrix(const Tensor& values) {
  PriceMatrix p;
  for (Index r = 0; r < values.rows(); ++r) p.tickers.push_back("T" + std::to_string(r));
  for (Index c = 0; c < values.cols(); ++c) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "2020-%02d-%02d", static_cast<int>(c / 28 + 1), static_cast<int>(c % 28 + 1));
    p.dates.push_back(buf);
  }
  p.values = values;
  return p;
}

}  // namespace

TEST(Prices, ParsesWellFormedFile) {
  const auto p = parse("date,AAA,BBB\n2020-01-02,1.5,10\n2020-01-03,1.6,11\n2020-01-06,1.7,12.25\n");
  ASSERT_EQ(p.assets(), 2);
  ASSERT_EQ(p.days(), 3);
  EXPECT_EQ(p.tickers[1], "BBB");
  EXPECT_EQ(p.dates[2], "2020-01-06");
  EXPECT_EQ(p.values(0, 1), 1.6);
  EXPECT_EQ(p.values(1, 2), 12.25);
}

TEST(Prices, EmptyCellNamesRowAndColumn) {
  const auto msg = message_of<IngestionError>("date,AAA,BBB\n2020-01-02,1,2\n2020-01-03,,2\n");
  EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("AAA"), std::string::npos) << msg;
  EXPECT_FALSE(message_of<IngestionError>("date,AAA,BBB\n2020-01-02,1\n").empty());
}

TEST(Prices, RejectsBadOrderingAndValues) {
  EXPECT_THROW(parse("date,A\n2020-01-03,1\n2020-01-02,1\n"), OrderingError);
  EXPECT_THROW(parse("date,A\n2020-01-03,1\n2020-01-03,1\n"), OrderingError);
  EXPECT_THROW(parse("date,A\n2020-01-03,0\n"), DomainError);
  EXPECT_THROW(parse("date,A\n2020-01-03,-2\n"), DomainError);
  EXPECT_THROW(parse("date,A\n2020-01-03,abc\n"), IngestionError);
  EXPECT_THROW(parse("date,A\n2020-02-30,1\n"), IngestionError);
  EXPECT_THROW(parse("day,A\n2020-01-03,1\n"), IngestionError);
  EXPECT_THROW(parse(""), IngestionError);
}

TEST(Prices, WriteThenParseIsExact) {
  CounterRng rng(3);
  Tensor v(3, 25);
  for (Index c = 0; c < v.cols(); ++c)
    for (Index r = 0; r < v.rows(); ++r) v(r, c) = std::exp(rng.normal()) * 100.0;
  const PriceMatrix p = matrix(v);
  std::ostringstream out;
  write_prices(out, p);
  const PriceMatrix q = parse(out.str());
  EXPECT_EQ(q.tickers, p.tickers);
  EXPECT_EQ(q.dates, p.dates);
  EXPECT_EQ(q.values, p.values);
}

TEST(Windows, TrainingIndices) {
  const auto s = training_indices(100, 60);
  ASSERT_EQ(s.size(), 41u);
  EXPECT_EQ(s.front(), 1u);
  EXPECT_EQ(s.back(), 41u);
  EXPECT_EQ(training_indices(60, 60), std::vector<std::size_t>{1});
  EXPECT_THROW(training_indices(60, 61), ConfigError);
}

TEST(Windows, InferenceIndices) {
  const WindowConfig cfg{40, 20};
  const auto s = inference_indices(800, cfg);
  ASSERT_EQ(s.size(), 38u);
  EXPECT_EQ(s.front(), 41u);
  EXPECT_EQ(s[1], 61u);
  EXPECT_EQ(s.back(), 781u);
  EXPECT_FALSE(inference_remainder(800, cfg));

  EXPECT_EQ(inference_indices(60, cfg), std::vector<std::size_t>{41});
  EXPECT_THROW(inference_indices(59, cfg), ConfigError);

  EXPECT_EQ(inference_indices(805, cfg).size(), 38u);
  ASSERT_TRUE(inference_remainder(805, cfg));
  EXPECT_EQ(*inference_remainder(805, cfg), 801u);
}

TEST(Windows, ConfigBounds) {
  EXPECT_THROW((WindowConfig{1, 5}.validate()), ConfigError);
  EXPECT_THROW((WindowConfig{2, 0}.validate()), ConfigError);
  EXPECT_EQ((WindowConfig{40, 20}.width()), 60);
}

TEST(Windows, ThreeSigmaExample) {
  Tensor v(1, 3);
  v << 1.0, 3.0, 5.0;
  const auto w = extract_window(matrix(v), 1, WindowConfig{2, 1}, true);
  EXPECT_DOUBLE_EQ(w.stats.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(w.stats.sd(0), 1.0);
  EXPECT_DOUBLE_EQ(w.history(0, 0), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.history(0, 1), 1.0 / 3.0);
  ASSERT_TRUE(w.future);
  EXPECT_DOUBLE_EQ((*w.future)(0, 0), 1.0);
  EXPECT_EQ(w.index, 1u);
}

TEST(Windows, ConstantHistoryNormalizesToZero) {
  const Tensor v = Tensor::Constant(2, 6, 50.0);
  const auto w = extract_window(matrix(v), 2, WindowConfig{3, 2}, false);
  EXPECT_TRUE(w.history.isZero(0.0));
  EXPECT_GT(w.stats.sd(0), 0.0);
  EXPECT_FALSE(w.future);
}

TEST(Windows, Denormalize) {
  NormStats s;
  s.mean = Vector::Constant(2, 2.0);
  s.sd = Vector::Constant(2, 1.0);
  EXPECT_EQ(denormalize(Tensor::Zero(2, 4), s), Tensor::Constant(2, 4, 2.0));
  EXPECT_DOUBLE_EQ(denormalize(Tensor::Constant(1, 1, 1.0 / 3.0), NormStats{Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)})(0, 0), 3.0);
  EXPECT_THROW(denormalize(Tensor::Zero(3, 4), s), DimensionError);
}

TEST(Windows, RoundTripAndNoLookAhead) {
  CounterRng rng(9);
  Tensor v(3, 200);
  for (Index r = 0; r < 3; ++r) {
    double p = 20.0 + 30.0 * r;
    for (Index c = 0; c < v.cols(); ++c) v(r, c) = p *= std::exp(0.02 * rng.normal());
  }
  PriceMatrix p = matrix(v);
  const WindowConfig cfg{12, 5};
  for (std::size_t i = 1; i + 16 <= 200; i += 7) {
    const auto w = extract_window(p, i, cfg, true);
    const Tensor raw = v.middleCols(static_cast<Index>(i - 1), 17);
    EXPECT_LE((denormalize(w.history, w.stats) - raw.leftCols(12)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((denormalize(*w.future, w.stats) - raw.rightCols(5)).cwiseAbs().maxCoeff(), 1e-12);

    const NormStats alone = history_stats(raw.leftCols(12));
    EXPECT_EQ(alone.mean, w.stats.mean);
    EXPECT_EQ(alone.sd, w.stats.sd);

    PriceMatrix shifted = p;
    shifted.values.middleCols(static_cast<Index>(i - 1) + 12, 5) *= 7.0;
    const auto w2 = extract_window(shifted, i, cfg, true);
    EXPECT_EQ(w2.stats.mean, w.stats.mean);
    EXPECT_EQ(w2.history, w.history);
  }
  EXPECT_THROW(extract_window(p, 190, cfg, true), RangeError);
  EXPECT_NO_THROW(extract_window(p, 189, cfg, false));
  EXPECT_THROW(extract_window(p, 0, cfg, false), RangeError);
}

TEST(Windows, FlattenIsAssetMajor) {
  Tensor b(2, 3);
  b << 1, 2, 3, 4, 5, 6;
  const Tensor f = flatten_row(b);
  EXPECT_EQ(f(0, 3), 4.0);
  EXPECT_EQ(unflatten_row(f, 0, 2, 3), b);
  EXPECT_THROW(unflatten_row(f, 0, 4, 2), DimensionError);
}
