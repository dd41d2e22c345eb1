#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/prices.hpp"
#include "acgan/random.hpp"

namespace acgan {

struct GbmConfig {
  Index assets = 4;
  Index days = 1400;
  std::uint64_t seed = 0;
  double annual_drift = 0.08;
  double annual_vol = 0.25;
  double correlation = 0.3;  // loading on one common factor
  double start_price = 100.0;
  std::string start_date = "2010-01-04";
};

// Weekdays from `start`, formatted YYYY-MM-DD.
inline std::vector<std::string> business_days(const std::string& start, Index count) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw ConfigError("bad start date '" + start + "'");
  std::chrono::sys_days day{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
  std::vector<std::string> out;
  while (static_cast<Index>(out.size()) < count) {
    const std::chrono::weekday wd{day};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) {
      const std::chrono::year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += std::chrono::days{1};
  }
  return out;
}

/// Correlated geometric Brownian motions on a daily grid. Asset i has
/// volatility annual_vol * (0.8 + 0.4 i / max(1, N-1)) so the assets differ.
inline PriceMatrix simulate_gbm(const GbmConfig& c) {
  if (c.assets < 1 || c.days < 2) throw ConfigError("simulation needs at least 1 asset and 2 days");
  if (!(c.correlation >= 0.0 && c.correlation < 1.0)) throw ConfigError("correlation must lie in [0, 1)");
  if (!(c.annual_vol > 0.0) || !(c.start_price > 0.0)) throw ConfigError("volatility and start price must be positive");
  CounterRng rng(c.seed);
  const double dt = 1.0 / 252.0;
  const double load = std::sqrt(c.correlation), idio = std::sqrt(1.0 - c.correlation);
  PriceMatrix p;
  for (Index i = 0; i < c.assets; ++i) p.tickers.push_back("A" + std::to_string(i + 1));
  p.dates = business_days(c.start_date, c.days);
  p.values.resize(c.assets, c.days);
  p.values.col(0).setConstant(c.start_price);
  Vector vol(c.assets);
  for (Index i = 0; i < c.assets; ++i) {
    vol(i) = c.annual_vol * (0.8 + 0.4 * static_cast<double>(i) / static_cast<double>(std::max<Index>(1, c.assets - 1)));
  }
  for (Index t = 1; t < c.days; ++t) {
    const double common = rng.normal();
    for (Index i = 0; i < c.assets; ++i) {
      const double shock = load * common + idio * rng.normal();
      const double step = (c.annual_drift - 0.5 * vol(i) * vol(i)) * dt + vol(i) * std::sqrt(dt) * shock;
      p.values(i, t) = p.values(i, t - 1) * std::exp(step);
    }
  }
  return p;
}

}  // namespace acgan
