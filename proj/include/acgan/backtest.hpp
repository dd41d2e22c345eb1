#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/portfolio.hpp"
#include "acgan/prices.hpp"
#include "acgan/scenarios.hpp"
#include "acgan/stylized_facts.hpp"

namespace acgan {

struct BacktestReport {
  std::string label;
  std::size_t eta = 0;
  std::size_t first_day = 0;        // 1-based day on which the curve equals 1 (day h)
  Vector equity;                    // days first_day .. K
  double annual_return = 0.0;
  Stat sharpe;                      // annualized
  std::vector<AllocationWeights> weights;
  std::vector<std::string> warnings;

  double final_value() const { return equity(equity.size() - 1); }
};

/// Rebalance days h+1, h+1+eta, ... strictly before K (a rebalance on the
/// last day would never be held).
inline std::vector<std::size_t> rebalance_days(std::size_t days, std::size_t history, std::size_t eta) {
  if (eta < 1) throw ConfigError("rebalance interval must be at least 1 day");
  if (days < history + eta || days <= history + 1) {
    throw ConfigError("horizon of " + std::to_string(days) + " days is too short for h=" + std::to_string(history) +
                      " and eta=" + std::to_string(eta));
  }
  std::vector<std::size_t> out;
  for (std::size_t t = history + 1; t < days; t += eta) out.push_back(t);
  return out;
}

/// Accounting for a given schedule. Weights for rebalance day t are struck at
/// the close of day t-1; holdings then drift with prices until the next
/// rebalance. The curve starts at 1 on day h.
inline BacktestReport run_backtest(const PriceMatrix& x, const std::vector<AllocationWeights>& schedule,
                                   std::size_t history, std::size_t eta, std::string label) {
  validate(x);
  const auto days = static_cast<std::size_t>(x.days());
  const auto dates = rebalance_days(days, history, eta);
  if (schedule.size() != dates.size()) {
    throw AlignmentError("strategy '" + label + "' has " + std::to_string(schedule.size()) + " allocations for " +
                         std::to_string(dates.size()) + " rebalance dates");
  }
  BacktestReport rep;
  rep.label = std::move(label);
  rep.eta = eta;
  rep.first_day = history;
  rep.weights = schedule;
  rep.equity.resize(static_cast<Index>(days - history + 1));
  rep.equity(0) = 1.0;

  const Index n = x.assets();
  Vector units = Vector::Zero(n);
  double value = 1.0;
  std::size_t next = 0;
  for (std::size_t day = history; day <= days; ++day) {
    const Index col = static_cast<Index>(day) - 1;
    if (day > history) value = units.dot(x.values.col(col));
    rep.equity(static_cast<Index>(day - history)) = value;
    if (next < dates.size() && dates[next] == day + 1) {
      const Vector& w = schedule[next].weights;
      if (w.size() != n) throw DimensionError("allocation has " + std::to_string(w.size()) + " weights");
      units = (value * w).cwiseQuotient(x.values.col(col));
      ++next;
    }
  }
  if (!(rep.equity.array() > 0.0).all() || !rep.equity.allFinite()) {
    throw NumericError("equity curve of '" + rep.label + "' is not strictly positive");
  }
  const Vector rets = (rep.equity.tail(rep.equity.size() - 1).array() /
                       rep.equity.head(rep.equity.size() - 1).array() - 1.0).matrix();
  rep.sharpe = guarded([&] { return sharpe_ratio(rets); });
  rep.annual_return =
      std::pow(rep.final_value(), kTradingDays / static_cast<double>(days - history)) - 1.0;
  return rep;
}

inline std::vector<AllocationWeights> fixed_schedule(const Vector& w, const std::vector<std::size_t>& dates) {
  std::vector<AllocationWeights> out;
  for (std::size_t d : dates) out.push_back({clean_simplex(w), std::nullopt, d});
  return out;
}

inline Vector equal_weights(Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

/// Markowitz: maximize the Sharpe ratio estimated on the trailing h true days
/// before each rebalance. A degenerate estimate keeps the previous weights
/// (equal weights before the first success).
inline std::vector<AllocationWeights> markowitz_schedule(const PriceMatrix& x, std::size_t history,
                                                         std::size_t eta, std::vector<std::string>* warnings = nullptr) {
  std::vector<AllocationWeights> out;
  Vector previous = equal_weights(x.assets());
  for (std::size_t t : rebalance_days(static_cast<std::size_t>(x.days()), history, eta)) {
    const Index first = static_cast<Index>(t - 1 - history);
    AllocationWeights w;
    try {
      w = max_sharpe(estimate_returns(x.values.middleCols(first, static_cast<Index>(history))));
    } catch (const DegenerateRisk& e) {
      if (warnings) warnings->push_back("day " + std::to_string(t) + ": " + e.what() + "; weights carried over");
      w.weights = previous;
    }
    w.day = t;
    previous = w.weights;
    out.push_back(std::move(w));
  }
  return out;
}

/// Price block of draw y used at rebalance day t: days t .. min(t+eta-1, K),
/// extended backwards to at least 3 prices.
inline Tensor forward_block(const Tensor& y, std::size_t t, std::size_t eta) {
  const auto days = static_cast<std::size_t>(y.cols());
  const std::size_t last = std::min(t + eta - 1, days);
  std::size_t first = t;
  while (last - first + 1 < 3 && first > 1) --first;
  return y.middleCols(static_cast<Index>(first - 1), static_cast<Index>(last - first + 1));
}

// weights[d][r]: allocation of draw r at rebalance date d; empty when the
// optimizer failed for that draw.
struct ScenarioWeightTable {
  std::vector<std::size_t> dates;
  std::vector<std::vector<std::optional<Vector>>> weights;
  std::vector<std::string> warnings;
};

inline ScenarioWeightTable scenario_weight_table(const ScenarioSet& set, std::size_t eta) {
  ScenarioWeightTable table;
  const auto history = static_cast<std::size_t>(set.window.history);
  table.dates = rebalance_days(static_cast<std::size_t>(set.reference.days()), history, eta);
  for (std::size_t t : table.dates) {
    std::vector<std::optional<Vector>> row;
    for (std::size_t r = 0; r < set.size(); ++r) {
      try {
        row.emplace_back(max_sharpe(estimate_returns(forward_block(set.draws[r], t, eta))).weights);
      } catch (const Error& e) {
        table.warnings.push_back("day " + std::to_string(t) + ", draw " + std::to_string(r) + ": " + e.kind() +
                                 ": " + e.what() + "; dropped");
        row.emplace_back(std::nullopt);
      }
    }
    table.weights.push_back(std::move(row));
  }
  return table;
}

// Elementwise mean of the surviving draws, renormalized onto the simplex.
// Identical draws return that draw untouched, free of summation rounding.
inline std::optional<Vector> mean_weights(const std::vector<std::optional<Vector>>& row) {
  std::optional<Vector> sum;
  const Vector* first = nullptr;
  bool identical = true;
  for (const auto& w : row) {
    if (!w) continue;
    if (!sum) {
      sum = Vector::Zero(w->size());
      first = &*w;
    }
    identical = identical && *w == *first;
    *sum += *w;
  }
  if (!sum) return std::nullopt;
  if (identical) return *first;
  return clean_simplex(*sum);
}

inline std::vector<AllocationWeights> mean_schedule(const ScenarioWeightTable& table, Index assets,
                                                    std::vector<std::string>* warnings = nullptr) {
  std::vector<AllocationWeights> out;
  Vector previous = equal_weights(assets);
  for (std::size_t d = 0; d < table.dates.size(); ++d) {
    const auto w = mean_weights(table.weights[d]);
    if (!w && warnings) {
      warnings->push_back("day " + std::to_string(table.dates[d]) + ": every draw failed; weights carried over");
    }
    previous = w ? *w : previous;
    out.push_back({previous, std::nullopt, table.dates[d]});
  }
  return out;
}

inline std::vector<AllocationWeights> draw_schedule(const ScenarioWeightTable& table, std::size_t r, Index assets) {
  std::vector<AllocationWeights> out;
  Vector previous = equal_weights(assets);
  for (std::size_t d = 0; d < table.dates.size(); ++d) {
    const auto& w = table.weights[d].at(r);
    previous = w ? *w : previous;
    out.push_back({previous, std::nullopt, table.dates[d]});
  }
  return out;
}

struct ScenarioBacktest {
  BacktestReport mean;
  std::vector<BacktestReport> per_draw;
};

/// Mean strategy plus one backtest per draw, sharing a single optimization
/// per (date, draw).
inline ScenarioBacktest backtest_scenarios(const ScenarioSet& set, std::size_t eta, const std::string& label) {
  const ScenarioWeightTable table = scenario_weight_table(set, eta);
  const auto history = static_cast<std::size_t>(set.window.history);
  ScenarioBacktest out;
  std::vector<std::string> warnings = table.warnings;
  out.mean = run_backtest(set.reference, mean_schedule(table, set.reference.assets(), &warnings), history, eta,
                          label + "-mean");
  out.mean.warnings = std::move(warnings);
  for (std::size_t r = 0; r < set.size(); ++r) {
    out.per_draw.push_back(run_backtest(set.reference, draw_schedule(table, r, set.reference.assets()), history, eta,
                                        label + "-draw-" + std::to_string(r)));
  }
  return out;
}

inline BacktestReport backtest_markowitz(const PriceMatrix& x, std::size_t history, std::size_t eta) {
  std::vector<std::string> warnings;
  BacktestReport rep = run_backtest(x, markowitz_schedule(x, history, eta, &warnings), history, eta, "markowitz");
  rep.warnings = std::move(warnings);
  return rep;
}

inline BacktestReport backtest_fixed(const PriceMatrix& x, const Vector& w, std::size_t history, std::size_t eta,
                                     std::string label) {
  const auto dates = rebalance_days(static_cast<std::size_t>(x.days()), history, eta);
  return run_backtest(x, fixed_schedule(w, dates), history, eta, std::move(label));
}

/// Buy-and-hold of one asset: a single allocation never rebalanced.
inline BacktestReport buy_and_hold(const PriceMatrix& x, std::size_t asset, std::size_t history) {
  const auto days = static_cast<std::size_t>(x.days());
  const Vector w = Vector::Unit(x.assets(), static_cast<Index>(asset));
  return backtest_fixed(x, w, history, days - history, x.tickers.at(asset));
}

inline void write_summary(std::ostream& out, const std::vector<BacktestReport>& reports) {
  out << "strategy,eta,annual_return,sharpe_ratio,final_value\n";
  for (const BacktestReport& r : reports) {
    out << r.label << ',' << r.eta << ',' << format_double(r.annual_return) << ',' << render(r.sharpe) << ','
        << format_double(r.final_value()) << '\n';
  }
}

inline void write_equity(std::ostream& out, const BacktestReport& r, const PriceMatrix& x) {
  out << "day,date,value\n";
  for (Index k = 0; k < r.equity.size(); ++k) {
    const std::size_t day = r.first_day + static_cast<std::size_t>(k);
    out << day << ',' << x.dates.at(day - 1) << ',' << format_double(r.equity(k)) << '\n';
  }
}

// Long format: one (day, strategy, value) row per point.
inline void write_equity_long(std::ostream& out, const std::vector<BacktestReport>& reports) {
  out << "day,strategy,value\n";
  for (const BacktestReport& r : reports) {
    for (Index k = 0; k < r.equity.size(); ++k) {
      out << r.first_day + static_cast<std::size_t>(k) << ',' << r.label << ',' << format_double(r.equity(k)) << '\n';
    }
  }
}

inline void write_weights(std::ostream& out, const BacktestReport& r, const std::vector<std::string>& tickers) {
  out << "day";
  for (const auto& t : tickers) out << ',' << t;
  out << '\n';
  for (const AllocationWeights& w : r.weights) {
    out << w.day;
    for (Index i = 0; i < w.weights.size(); ++i) out << ',' << format_double(w.weights(i));
    out << '\n';
  }
}

// Return-vs-Sharpe scatter: one row per draw.
inline void write_scatter(std::ostream& out, const std::string& strategy, const ScenarioBacktest& bt) {
  for (std::size_t r = 0; r < bt.per_draw.size(); ++r) {
    const BacktestReport& rep = bt.per_draw[r];
    out << strategy << ',' << rep.eta << ',' << r << ',' << format_double(rep.annual_return) << ','
        << render(rep.sharpe) << '\n';
  }
}

}  // namespace acgan
