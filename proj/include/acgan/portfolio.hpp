#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "acgan/errors.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

inline constexpr double kTradingDays = 252.0;

struct ReturnEstimate {
  Vector mean;     // per-period expected simple return
  Tensor cov;      // sample covariance, symmetrized and PSD-floored
  Index periods = 0;
};

/// Simple returns p_{t+1}/p_t - 1 of an N x T price block.
inline Tensor simple_returns(const Tensor& prices) {
  if (prices.cols() < 2) throw InsufficientData("returns need at least 2 prices");
  return (prices.rightCols(prices.cols() - 1).array() / prices.leftCols(prices.cols() - 1).array() - 1.0).matrix();
}

inline ReturnEstimate estimate_returns(const Tensor& prices) {
  if (prices.cols() < 3) {
    throw InsufficientData("return estimation needs at least 3 prices, got " + std::to_string(prices.cols()));
  }
  if (!prices.allFinite() || (prices.array() <= 0.0).any()) throw DomainError("prices must be positive");
  const Tensor r = simple_returns(prices);
  const Index n = r.cols();
  ReturnEstimate est;
  est.periods = n;
  est.mean = r.rowwise().mean();
  const Tensor centered = r.colwise() - est.mean;
  Tensor cov = centered * centered.transpose() / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Tensor> eig(cov);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Vector floored = eig.eigenvalues().cwiseMax(0.0);
    cov = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
  }
  est.cov = cov;
  return est;
}

struct AllocationWeights {
  Vector weights;
  std::optional<double> sharpe;  // per-period, unannualized; absent if undefined
  std::size_t day = 0;           // 1-based rebalance day, 0 if not tied to one
};

inline constexpr double kMinRisk = 1e-12;

inline double portfolio_risk(const ReturnEstimate& est, const Vector& w) {
  return std::sqrt(std::max(0.0, w.dot(est.cov * w)));
}

// Per-period Sharpe ratio of w, or nullopt when the portfolio risk is below
// kMinRisk.
inline std::optional<double> portfolio_sharpe(const ReturnEstimate& est, const Vector& w, double rf) {
  const double risk = portfolio_risk(est, w);
  if (risk < kMinRisk) return std::nullopt;
  return (w.dot(est.mean) - rf) / risk;
}

// Euclidean projection onto {w >= 0, sum w = 1}.
inline Vector project_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

// Exact simplex membership: clip round-off negatives and renormalize.
inline Vector clean_simplex(Vector w) {
  w = w.cwiseMax(0.0);
  const double s = w.sum();
  if (!(s > 0.0)) throw NumericError("weights vanished");
  return w / s;
}

inline double entropy(const Vector& w) {
  double h = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) h -= w(i) * std::log(w(i));
  }
  return h;
}

namespace detail {

// Projected gradient ascent on the Sharpe ratio with backtracking.
inline Vector sharpe_ascent(const ReturnEstimate& est, double rf, Vector w, int iterations) {
  auto value = [&](const Vector& x) {
    const auto s = portfolio_sharpe(est, x, rf);
    return s ? *s : -std::numeric_limits<double>::infinity();
  };
  double current = value(w);
  double step = 1.0;
  for (int it = 0; it < iterations && std::isfinite(current); ++it) {
    const double risk = portfolio_risk(est, w);
    const double excess = w.dot(est.mean) - rf;
    const Vector grad = (est.mean * risk * risk - excess * (est.cov * w)) / (risk * risk * risk);
    const double gnorm = grad.norm();
    if (!(gnorm > 0.0)) break;
    bool moved = false;
    for (int back = 0; back < 40; ++back) {
      const Vector trial = project_simplex(w + (step / gnorm) * grad);
      const double v = value(trial);
      if (v > current) {
        w = trial;
        current = v;
        step = std::min(step * 2.0, 1.0);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return w;
}

}  // namespace detail

inline constexpr Index kExhaustiveSupportLimit = 16;

/// Long-only maximum Sharpe portfolio. For N up to kExhaustiveSupportLimit
/// every support set S is tried: the stationary point of the ratio on the
/// face of S is w proportional to Cov_S^-1 (r_S - rf) when that vector has a
/// single sign. Vertices and face barycentres are added as candidates, and
/// the best one is polished by projected gradient ascent. Among candidates
/// whose ratio ties to 1e-12 the most diversified (maximum entropy) wins.
inline AllocationWeights max_sharpe(const ReturnEstimate& est, double rf = 0.0) {
  const Index n = est.mean.size();
  if (n < 1) throw DimensionError("max_sharpe needs at least one asset");
  if (est.cov.rows() != n || est.cov.cols() != n) {
    throw DimensionError("covariance " + shape_string(est.cov) + " does not match " + std::to_string(n) + " assets");
  }
  if (!est.mean.allFinite() || !est.cov.allFinite()) throw NumericError("return estimate is not finite");

  AllocationWeights out;
  if (n == 1) {
    out.weights = Vector::Ones(1);
    out.sharpe = portfolio_sharpe(est, out.weights, rf);
    return out;
  }

  // A riskless asset with positive excess return dominates everything.
  Index riskless = -1;
  for (Index i = 0; i < n; ++i) {
    if (std::sqrt(std::max(0.0, est.cov(i, i))) < kMinRisk && est.mean(i) - rf > 0.0 &&
        (riskless < 0 || est.mean(i) > est.mean(riskless))) {
      riskless = i;
    }
  }
  if (riskless >= 0) {
    out.weights = Vector::Unit(n, riskless);
    return out;
  }

  std::vector<Vector> candidates;
  for (Index i = 0; i < n; ++i) candidates.push_back(Vector::Unit(n, i));
  candidates.push_back(Vector::Constant(n, 1.0 / static_cast<double>(n)));

  const Vector excess = est.mean.array() - rf;
  if (n <= kExhaustiveSupportLimit) {
    const unsigned long subsets = 1UL << n;
    for (unsigned long mask = 3; mask < subsets; ++mask) {
      std::vector<Index> s;
      for (Index i = 0; i < n; ++i) {
        if (mask & (1UL << i)) s.push_back(i);
      }
      if (s.size() < 2) continue;
      const auto k = static_cast<Index>(s.size());
      Tensor sub(k, k);
      Vector rhs(k);
      for (Index a = 0; a < k; ++a) {
        rhs(a) = excess(s[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < k; ++b) sub(a, b) = est.cov(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]);
      }
      Vector bary = Vector::Zero(n);
      for (Index i : s) bary(i) = 1.0 / static_cast<double>(k);
      candidates.push_back(bary);

      Eigen::FullPivLU<Tensor> lu(sub);
      if (!lu.isInvertible()) continue;
      const Vector y = lu.solve(rhs);
      if (!y.allFinite()) continue;
      const bool positive = (y.array() > 0.0).all();
      const bool negative = (y.array() < 0.0).all();
      if (!positive && !negative) continue;
      Vector w = Vector::Zero(n);
      const double total = y.sum();
      for (Index a = 0; a < k; ++a) w(s[static_cast<std::size_t>(a)]) = y(a) / total;
      candidates.push_back(w);
    }
  }

  std::optional<double> best_value;
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto v = portfolio_sharpe(est, candidates[c], rf);
    if (v && (!best_value || *v > *best_value)) {
      best_value = v;
      best = c;
    }
  }
  if (!best_value) {
    throw DegenerateRisk("portfolio risk below " + std::to_string(kMinRisk) + " for every long-only allocation");
  }

  // Polish from the best candidate (and, for large N, from every vertex).
  const int iterations = n <= kExhaustiveSupportLimit ? 200 : 2000;
  std::vector<Vector> starts{candidates[best]};
  if (n > kExhaustiveSupportLimit) starts.insert(starts.end(), candidates.begin(), candidates.end());
  for (const Vector& start : starts) {
    const Vector w = detail::sharpe_ascent(est, rf, start, iterations);
    const auto v = portfolio_sharpe(est, w, rf);
    if (v && *v > *best_value + 1e-12 * std::max(1.0, std::abs(*best_value))) candidates.push_back(w);
  }

  double top = -std::numeric_limits<double>::infinity();
  std::vector<std::optional<double>> values;
  for (const Vector& c : candidates) {
    values.push_back(portfolio_sharpe(est, c, rf));
    if (values.back()) top = std::max(top, *values.back());
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(top));
  double best_entropy = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!values[c] || *values[c] < top - tol) continue;
    const double h = entropy(candidates[c]);
    if (h > best_entropy + 1e-12) {
      best_entropy = h;
      best = c;
    }
  }
  out.weights = clean_simplex(candidates[best]);
  out.sharpe = portfolio_sharpe(est, out.weights, rf);
  if (!out.sharpe) {
    throw DegenerateRisk("optimal portfolio has risk below " + std::to_string(kMinRisk));
  }
  return out;
}

/// Annualized Sharpe ratio: mean excess return over its sample standard
/// deviation, times sqrt(periods_per_year).
inline double sharpe_ratio(const Vector& returns, double rf = 0.0, double periods_per_year = kTradingDays) {
  if (returns.size() < 2) throw InsufficientData("Sharpe ratio needs at least 2 returns");
  const double n = static_cast<double>(returns.size());
  const double mean = returns.mean() - rf;
  const double var = (returns.array() - returns.mean()).square().sum() / (n - 1.0);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-14 * std::max(1.0, std::abs(returns.mean())))) {
    throw UndefinedStatistic("Sharpe ratio undefined for a zero-volatility return series");
  }
  return mean / sd * std::sqrt(periods_per_year);
}

}  // namespace acgan
