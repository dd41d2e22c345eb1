#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/prices.hpp"
#include "acgan/scenarios.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

// A statistic that may be unavailable; `missing` holds the error kind.
struct Stat {
  std::optional<double> value;
  std::string missing;

  static Stat of(double v) { return Stat{v, {}}; }
  static Stat none(std::string why) { return Stat{std::nullopt, std::move(why)}; }
  explicit operator bool() const { return value.has_value(); }
};

inline std::string render(const Stat& s) {
  return s.value ? format_double(*s.value) : "NA(" + (s.missing.empty() ? std::string("missing") : s.missing) + ")";
}

template <typename F>
Stat guarded(F&& f) {
  try {
    return Stat::of(f());
  } catch (const UndefinedStatistic& e) {
    return Stat::none(e.kind());
  } catch (const InsufficientData& e) {
    return Stat::none(e.kind());
  }
}

// Mean of the available values.
inline Stat mean_of(const std::vector<Stat>& stats) {
  double sum = 0.0;
  std::size_t n = 0;
  std::string why;
  for (const Stat& s : stats) {
    if (s.value) {
      sum += *s.value;
      ++n;
    } else if (why.empty()) {
      why = s.missing;
    }
  }
  if (n == 0) return Stat::none(why.empty() ? "insufficient-data" : why);
  return Stat::of(sum / static_cast<double>(n));
}

/// r_t = log p_{t+1} - log p_t.
inline Vector log_returns(const Vector& prices) {
  if (prices.size() < 2) throw InsufficientData("log returns need at least 2 prices");
  for (Index t = 0; t < prices.size(); ++t) {
    if (!std::isfinite(prices(t)) || prices(t) <= 0.0) {
      throw DomainError("log returns need positive prices (day " + std::to_string(t + 1) + ")");
    }
  }
  Vector r(prices.size() - 1);
  for (Index t = 0; t + 1 < prices.size(); ++t) r(t) = std::log(prices(t + 1)) - std::log(prices(t));
  return r;
}

namespace detail {

inline double mean(const double* x, Index n) {
  double s = 0.0;
  for (Index t = 0; t < n; ++t) s += x[t];
  return s / static_cast<double>(n);
}

// Population variance about a given mean.
inline double variance(const double* x, Index n, double mu) {
  double s = 0.0;
  for (Index t = 0; t < n; ++t) s += (x[t] - mu) * (x[t] - mu);
  return s / static_cast<double>(n);
}

inline bool degenerate(double var, double mu) { return !(var > 1e-28 * std::max(1.0, mu * mu)); }

// (1/n) sum (x_t - mx)(y_t - my) / sqrt(var_x var_y) where the moments are
// supplied. sqrt(v * v) == v exactly, so a series against itself gives 1.
inline double lagged_corr(const double* x, double mx, double vx, const double* y, double my, double vy,
                          Index n) {
  double s = 0.0;
  for (Index t = 0; t < n; ++t) s += (x[t] - mx) * (y[t] - my);
  return (s / static_cast<double>(n)) / std::sqrt(vx * vy);
}

}  // namespace detail

/// Product-moment correlation of two equal-length series.
inline double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw DimensionError("pearson: lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw InsufficientData("pearson needs at least 2 points");
  const Index n = x.size();
  const double mx = detail::mean(x.data(), n), my = detail::mean(y.data(), n);
  const double vx = detail::variance(x.data(), n, mx), vy = detail::variance(y.data(), n, my);
  if (detail::degenerate(vx, mx) || detail::degenerate(vy, my)) {
    throw UndefinedStatistic("pearson: constant input");
  }
  return std::clamp(detail::lagged_corr(x.data(), mx, vx, y.data(), my, vy, n), -1.0, 1.0);
}

/// (1/(n-k)) sum_t (r_t - mu)(r_{t+k} - mu) / sigma^2 with the whole series'
/// mean and population variance.
inline double autocorrelation(const Vector& r, Index k) {
  if (k < 0) throw ParameterError("autocorrelation lag must be non-negative");
  if (r.size() <= k + 1) {
    throw InsufficientData("autocorrelation at lag " + std::to_string(k) + " needs more than " +
                           std::to_string(k + 1) + " points");
  }
  const Index n = r.size();
  const double mu = detail::mean(r.data(), n);
  const double var = detail::variance(r.data(), n, mu);
  if (detail::degenerate(var, mu)) throw UndefinedStatistic("autocorrelation: zero variance");
  return detail::lagged_corr(r.data(), mu, var, r.data() + k, mu, var, n - k);
}

/// (E[r_t |r_{t+k}|^2] - E[r_t] E[|r_t|^2]) / E[|r_t|^2]^2 from sample moments;
/// the lagged product averages over the n-k overlapping pairs.
inline double cross_leverage(const Vector& ri, const Vector& rj, Index k) {
  if (ri.size() != rj.size()) throw DimensionError("cross leverage: series lengths differ");
  if (k < 0) throw ParameterError("leverage lag must be non-negative");
  const Index n = ri.size();
  if (n <= k + 1) throw InsufficientData("leverage at lag " + std::to_string(k) + " needs more points");
  double lagged = 0.0;
  for (Index t = 0; t + k < n; ++t) lagged += ri(t) * rj(t + k) * rj(t + k);
  lagged /= static_cast<double>(n - k);
  const double m1 = detail::mean(ri.data(), n);
  double m2 = 0.0;
  for (Index t = 0; t < n; ++t) m2 += rj(t) * rj(t);
  m2 /= static_cast<double>(n);
  if (!(m2 > 0.0)) throw UndefinedStatistic("leverage: zero second moment");
  return (lagged - m1 * m2) / (m2 * m2);
}

inline double leverage_effect(const Vector& r, Index k) { return cross_leverage(r, r, k); }

/// Corr(r_i,t, r_j,t+k) with each series' own full-sample mean and variance.
inline double cross_correlation(const Vector& ri, const Vector& rj, Index k) {
  if (ri.size() != rj.size()) throw DimensionError("cross correlation: series lengths differ");
  if (k < 0) throw ParameterError("cross correlation lag must be non-negative");
  const Index n = ri.size();
  if (n <= k + 1) throw InsufficientData("cross correlation at lag " + std::to_string(k) + " needs more points");
  const double mi = detail::mean(ri.data(), n), mj = detail::mean(rj.data(), n);
  const double vi = detail::variance(ri.data(), n, mi), vj = detail::variance(rj.data(), n, mj);
  if (detail::degenerate(vi, mi) || detail::degenerate(vj, mj)) {
    throw UndefinedStatistic("cross correlation: zero variance");
  }
  return detail::lagged_corr(ri.data(), mi, vi, rj.data() + k, mj, vj, n - k);
}

inline double volatility_correlation(const Vector& ri, const Vector& rj, Index k) {
  return cross_correlation(ri.cwiseAbs(), rj.cwiseAbs(), k);
}

struct CoarseFine {
  double rho = 0.0;    // rho_cf(k)
  double delta = 0.0;  // rho_cf(k) - rho_cf(-k)
};

// nu_c(t) = |sum_{i=1..tau} r_{t-i}| and nu_f(t) = sum_{i=1..tau} |r_{t-i}| for
// t = tau .. n.
inline std::pair<Vector, Vector> coarse_fine_volatility(const Vector& r, Index tau) {
  if (tau < 1) throw ParameterError("coarse-fine window must be at least 1");
  const Index n = r.size();
  if (n < tau) throw InsufficientData("coarse-fine window longer than the series");
  Vector coarse(n - tau + 1), fine(n - tau + 1);
  for (Index t = tau; t <= n; ++t) {
    double s = 0.0, a = 0.0;
    for (Index i = 1; i <= tau; ++i) {
      s += r(t - i);
      a += std::abs(r(t - i));
    }
    coarse(t - tau) = std::abs(s);
    fine(t - tau) = a;
  }
  return {coarse, fine};
}

/// Corr(nu_c(t+k), nu_f(t)) over the overlapping range, any sign of k.
inline double coarse_fine_rho(const Vector& r, Index tau, Index k) {
  const Index lag = k < 0 ? -k : k;
  if (r.size() <= tau + lag + 1) throw InsufficientData("coarse-fine correlation needs a longer series");
  const auto [coarse, fine] = coarse_fine_volatility(r, tau);
  const Index m = coarse.size() - lag;
  if (k >= 0) return pearson(coarse.segment(k, m), fine.head(m));
  return pearson(coarse.head(m), fine.segment(lag, m));
}

inline CoarseFine coarse_fine(const Vector& r, Index tau, Index k) {
  CoarseFine out;
  out.rho = coarse_fine_rho(r, tau, k);
  out.delta = out.rho - coarse_fine_rho(r, tau, -k);
  return out;
}

struct Moments {
  double kurtosis = 0.0;  // non-excess
  double skewness = 0.0;
};

inline Moments moments(const Vector& r) {
  if (r.size() < 4) throw InsufficientData("moments need at least 4 observations");
  const Index n = r.size();
  const double mu = detail::mean(r.data(), n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (Index t = 0; t < n; ++t) {
    const double d = r(t) - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (detail::degenerate(m2, mu)) throw UndefinedStatistic("moments: zero variance");
  return {m4 / (m2 * m2), m3 / (m2 * std::sqrt(m2))};
}

struct TailFit {
  double alpha = 0.0;
  double xmin = 0.0;
  std::size_t tail_size = 0;
  double ks = 0.0;
  bool plausible = false;  // alpha within the usual power-law range (<= 5)
};

inline constexpr std::size_t kMinTailPoints = 20;
inline constexpr std::size_t kMinTailObservations = 100;

/// Continuous power-law fit p(x) ~ x^-alpha to |r|: for each candidate x_min
/// alpha = 1 + n / sum ln(x / x_min), and the x_min whose fit has the smallest
/// Kolmogorov-Smirnov distance to the empirical tail wins.
inline TailFit tail_exponent(const Vector& r, std::size_t max_candidates = 256) {
  if (static_cast<std::size_t>(r.size()) < kMinTailObservations) {
    throw InsufficientData("tail fit needs at least " + std::to_string(kMinTailObservations) + " observations");
  }
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(r.size()));
  for (Index t = 0; t < r.size(); ++t) {
    const double a = std::abs(r(t));
    if (a > 0.0 && std::isfinite(a)) x.push_back(a);
  }
  std::sort(x.begin(), x.end());
  if (x.size() < kMinTailPoints) throw InsufficientData("fewer than 20 non-zero magnitudes");

  // Suffix sums of log x for O(1) alpha per candidate.
  const std::size_t n = x.size();
  std::vector<double> logs(n), suffix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(x[i]);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + logs[i];

  std::vector<std::size_t> candidates;
  const std::size_t last = n - kMinTailPoints;
  for (std::size_t i = 0; i <= last; ++i) {
    if (i > 0 && x[i] == x[i - 1]) continue;
    candidates.push_back(i);
  }
  if (candidates.size() > max_candidates) {
    std::vector<std::size_t> thinned;
    for (std::size_t k = 0; k < max_candidates; ++k) {
      thinned.push_back(candidates[k * (candidates.size() - 1) / (max_candidates - 1)]);
    }
    thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
    candidates = std::move(thinned);
  }

  TailFit best;
  bool found = false;
  for (std::size_t i : candidates) {
    const std::size_t m = n - i;
    const double denom = suffix[i] - static_cast<double>(m) * logs[i];
    if (!(denom > 0.0)) continue;
    const double alpha = 1.0 + static_cast<double>(m) / denom;
    double ks = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      const double model = 1.0 - std::pow(x[j] / x[i], 1.0 - alpha);
      const double lo = static_cast<double>(j - i) / static_cast<double>(m);
      const double hi = static_cast<double>(j - i + 1) / static_cast<double>(m);
      ks = std::max({ks, std::abs(model - lo), std::abs(hi - model)});
    }
    if (!found || ks < best.ks) {
      best = TailFit{alpha, x[i], m, ks, alpha <= 5.0};
      found = true;
    }
  }
  if (!found) throw InsufficientData("no cutoff leaves at least 20 distinct tail points");
  return best;
}

// Lags averaged in the summary tables.
inline constexpr Index kMaxLag = 10;
inline constexpr Index kCoarseFineWindow = 5;

struct AssetFacts {
  std::string ticker;
  Stat autocorrelation;  // mean |Corr(r_t, r_t+k)|, k = 1..10
  Stat fat_tail;         // fitted alpha
  Stat leverage;         // mean L(k), k = 1..10
  Stat coarse_fine;      // delta rho_cf(1), tau = 5
  Stat kurtosis;
  Stat skewness;
};

struct PairFacts {
  std::size_t i = 0, j = 0;
  Stat cross_correlation;       // mean over k = 1..10
  Stat volatility_correlation;  // mean over k = 1..10
  Stat cross_leverage;          // mean over k = 1..10
};

struct CrossFacts {
  std::vector<PairFacts> pairs;
  Stat cross_correlation;
  Stat volatility_correlation;
  Stat cross_leverage;
};

struct FactReport {
  std::vector<AssetFacts> assets;
  CrossFacts cross;
  std::vector<std::string> warnings;
};

template <typename F>
Stat mean_over_lags(F&& f) {
  return guarded([&] {
    double s = 0.0;
    for (Index k = 1; k <= kMaxLag; ++k) s += f(k);
    return s / static_cast<double>(kMaxLag);
  });
}

inline AssetFacts asset_facts(const std::string& ticker, const Vector& r) {
  AssetFacts a;
  a.ticker = ticker;
  a.autocorrelation = mean_over_lags([&](Index k) { return std::abs(autocorrelation(r, k)); });
  a.fat_tail = guarded([&] { return tail_exponent(r).alpha; });
  a.leverage = mean_over_lags([&](Index k) { return leverage_effect(r, k); });
  a.coarse_fine = guarded([&] { return coarse_fine(r, kCoarseFineWindow, 1).delta; });
  a.kurtosis = guarded([&] { return moments(r).kurtosis; });
  a.skewness = guarded([&] { return moments(r).skewness; });
  return a;
}

/// Pairwise statistics over all unordered pairs i < j; degenerate pairs are
/// dropped from the means and reported as warnings.
inline CrossFacts cross_stats(const std::vector<Vector>& returns, const std::vector<std::string>& tickers,
                              std::vector<std::string>* warnings = nullptr) {
  if (returns.size() < 2) throw InsufficientData("cross statistics need at least 2 assets");
  CrossFacts c;
  std::vector<Stat> cc, vc, cl;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    for (std::size_t j = i + 1; j < returns.size(); ++j) {
      if (returns[i].size() != returns[j].size()) throw AlignmentError("cross statistics need aligned series");
      PairFacts p;
      p.i = i;
      p.j = j;
      p.cross_correlation = mean_over_lags([&](Index k) { return cross_correlation(returns[i], returns[j], k); });
      p.volatility_correlation =
          mean_over_lags([&](Index k) { return volatility_correlation(returns[i], returns[j], k); });
      p.cross_leverage = mean_over_lags([&](Index k) { return cross_leverage(returns[i], returns[j], k); });
      if (warnings && (!p.cross_correlation || !p.volatility_correlation || !p.cross_leverage)) {
        warnings->push_back("pair " + tickers.at(i) + "/" + tickers.at(j) + " is degenerate and excluded");
      }
      cc.push_back(p.cross_correlation);
      vc.push_back(p.volatility_correlation);
      cl.push_back(p.cross_leverage);
      c.pairs.push_back(std::move(p));
    }
  }
  c.cross_correlation = mean_of(cc);
  c.volatility_correlation = mean_of(vc);
  c.cross_leverage = mean_of(cl);
  return c;
}

/// Facts of the price block formed by days [first, first + count), 0-based.
inline FactReport compute_facts(const Tensor& prices, const std::vector<std::string>& tickers, Index first,
                                Index count) {
  if (first < 0 || count < 2 || first + count > prices.cols()) throw RangeError("fact range outside the series");
  FactReport rep;
  std::vector<Vector> returns;
  for (Index a = 0; a < prices.rows(); ++a) {
    const Vector p = prices.row(a).segment(first, count).transpose();
    returns.push_back(log_returns(p));
    rep.assets.push_back(asset_facts(tickers.at(static_cast<std::size_t>(a)), returns.back()));
  }
  if (returns.size() >= 2) rep.cross = cross_stats(returns, tickers, &rep.warnings);
  return rep;
}

// Cellwise mean over reports of identical shape.
inline FactReport average_reports(const std::vector<FactReport>& reports) {
  if (reports.empty()) throw InsufficientData("no reports to average");
  FactReport out = reports.front();
  const auto avg = [&](auto&& get) {
    std::vector<Stat> v;
    for (const FactReport& r : reports) v.push_back(get(r));
    return mean_of(v);
  };
  for (std::size_t a = 0; a < out.assets.size(); ++a) {
    out.assets[a].autocorrelation = avg([&](const FactReport& r) { return r.assets[a].autocorrelation; });
    out.assets[a].fat_tail = avg([&](const FactReport& r) { return r.assets[a].fat_tail; });
    out.assets[a].leverage = avg([&](const FactReport& r) { return r.assets[a].leverage; });
    out.assets[a].coarse_fine = avg([&](const FactReport& r) { return r.assets[a].coarse_fine; });
    out.assets[a].kurtosis = avg([&](const FactReport& r) { return r.assets[a].kurtosis; });
    out.assets[a].skewness = avg([&](const FactReport& r) { return r.assets[a].skewness; });
  }
  for (std::size_t p = 0; p < out.cross.pairs.size(); ++p) {
    auto& pair = out.cross.pairs[p];
    pair.cross_correlation = avg([&](const FactReport& r) { return r.cross.pairs[p].cross_correlation; });
    pair.volatility_correlation = avg([&](const FactReport& r) { return r.cross.pairs[p].volatility_correlation; });
    pair.cross_leverage = avg([&](const FactReport& r) { return r.cross.pairs[p].cross_leverage; });
  }
  out.cross.cross_correlation = avg([](const FactReport& r) { return r.cross.cross_correlation; });
  out.cross.volatility_correlation = avg([](const FactReport& r) { return r.cross.volatility_correlation; });
  out.cross.cross_leverage = avg([](const FactReport& r) { return r.cross.cross_leverage; });
  out.warnings.clear();
  for (const FactReport& r : reports) out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  return out;
}

struct ScenarioEvaluation {
  std::vector<std::string> tickers;
  FactReport real;
  FactReport synthetic;  // averaged over draws
  std::vector<Stat> pearson;  // per asset, averaged over draws
};

/// Real and synthetic facts on the generated days h+1..K only, and per-asset
/// price correlation between X and each Y_r over the same days.
inline ScenarioEvaluation evaluate_scenarios(const ScenarioSet& set) {
  if (set.draws.empty()) throw InsufficientData("scenario set is empty");
  const Index first = set.window.history;
  const Index count = set.reference.days() - first;
  ScenarioEvaluation ev;
  ev.tickers = set.reference.tickers;
  ev.real = compute_facts(set.reference.values, set.reference.tickers, first, count);
  std::vector<FactReport> per_draw;
  std::vector<std::vector<Stat>> corr(static_cast<std::size_t>(set.reference.assets()));
  for (const Tensor& y : set.draws) {
    if (y.rows() != set.reference.assets() || y.cols() != set.reference.days()) {
      throw AlignmentError("scenario " + shape_string(y) + " does not match test data " +
                           shape_string(set.reference.values));
    }
    per_draw.push_back(compute_facts(y, set.reference.tickers, first, count));
    for (Index a = 0; a < y.rows(); ++a) {
      const Vector truth = set.reference.values.row(a).segment(first, count).transpose();
      const Vector fake = y.row(a).segment(first, count).transpose();
      corr[static_cast<std::size_t>(a)].push_back(guarded([&] { return pearson(truth, fake); }));
    }
  }
  ev.synthetic = average_reports(per_draw);
  for (const auto& c : corr) ev.pearson.push_back(mean_of(c));
  return ev;
}

inline const char* const kAssetFactNames[] = {"Autocorrelation", "Fat-tail", "Leverage effect",
                                              "Coarse-fine",     "Kurtosis", "Skewness"};

inline const Stat& asset_fact(const AssetFacts& a, std::size_t row) {
  switch (row) {
    case 0: return a.autocorrelation;
    case 1: return a.fat_tail;
    case 2: return a.leverage;
    case 3: return a.coarse_fine;
    case 4: return a.kurtosis;
    default: return a.skewness;
  }
}

/// One row per statistic, one column per asset plus the cross-asset mean.
inline void write_fact_table(std::ostream& out, const FactReport& rep) {
  out << "statistic";
  for (const AssetFacts& a : rep.assets) out << ',' << a.ticker;
  out << ",mean\n";
  for (std::size_t row = 0; row < std::size(kAssetFactNames); ++row) {
    out << kAssetFactNames[row];
    std::vector<Stat> cells;
    for (const AssetFacts& a : rep.assets) {
      cells.push_back(asset_fact(a, row));
      out << ',' << render(cells.back());
    }
    out << ',' << render(mean_of(cells)) << '\n';
  }
}

inline void write_cross_table(std::ostream& out, const FactReport& real, const FactReport& synthetic,
                              const std::vector<std::string>& tickers) {
  out << "pair,statistic,real,synthetic\n";
  const auto row = [&](const std::string& pair, const char* name, const Stat& r, const Stat& s) {
    out << pair << ',' << name << ',' << render(r) << ',' << render(s) << '\n';
  };
  for (std::size_t p = 0; p < real.cross.pairs.size(); ++p) {
    const PairFacts& a = real.cross.pairs[p];
    const PairFacts& b = synthetic.cross.pairs.at(p);
    const std::string name = tickers.at(a.i) + "/" + tickers.at(a.j);
    row(name, "Cross correlation", a.cross_correlation, b.cross_correlation);
    row(name, "Volatility correlation", a.volatility_correlation, b.volatility_correlation);
    row(name, "Cross leverage effect", a.cross_leverage, b.cross_leverage);
  }
  row("mean", "Cross correlation", real.cross.cross_correlation, synthetic.cross.cross_correlation);
  row("mean", "Volatility correlation", real.cross.volatility_correlation, synthetic.cross.volatility_correlation);
  row("mean", "Cross leverage effect", real.cross.cross_leverage, synthetic.cross.cross_leverage);
}

inline void write_pearson_table(std::ostream& out, const ScenarioEvaluation& ev) {
  out << "asset,pearson\n";
  for (std::size_t a = 0; a < ev.tickers.size(); ++a) out << ev.tickers[a] << ',' << render(ev.pearson[a]) << '\n';
  out << "mean," << render(mean_of(ev.pearson)) << '\n';
}

}  // namespace acgan
