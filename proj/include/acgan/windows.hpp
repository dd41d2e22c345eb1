#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/prices.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

// h historical days condition f generated days; w = h + f.
struct WindowConfig {
  Index history = 40;
  Index future = 20;

  Index width() const { return history + future; }

  void validate() const {
    if (history < 2) throw ConfigError("window history length must be at least 2");
    if (future < 1) throw ConfigError("window future length must be at least 1");
  }
};

// Per-asset mean and (floored) population standard deviation of the
// historical segment of one window.
struct NormStats {
  Vector mean;
  Vector sd;
};

struct WindowSample {
  Tensor history;                // N x h, normalized
  std::optional<Tensor> future;  // N x f, normalized with the history stats
  NormStats stats;
  std::size_t index = 0;         // 1-based first day of the history segment
};

inline double sigma_floor(double mean) { return 1e-8 * std::max(1.0, mean); }

/// Training window starts {1, ..., D - w + 1}.
inline std::vector<std::size_t> training_indices(std::size_t days, std::size_t width) {
  if (width == 0) throw ConfigError("window width must be positive");
  if (days < width) {
    throw ConfigError("training data has " + std::to_string(days) + " days, window needs " +
                      std::to_string(width));
  }
  std::vector<std::size_t> s(days - width + 1);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = k + 1;
  return s;
}

/// First generated day of every full inference block: h+1, h+f+1, ... with
/// i + f - 1 <= K.
inline std::vector<std::size_t> inference_indices(std::size_t days, const WindowConfig& cfg) {
  cfg.validate();
  const auto h = static_cast<std::size_t>(cfg.history);
  const auto f = static_cast<std::size_t>(cfg.future);
  if (days < h + f) {
    throw ConfigError("test data has " + std::to_string(days) + " days, inference needs at least " +
                      std::to_string(h + f));
  }
  std::vector<std::size_t> s;
  for (std::size_t i = h + 1; i + f - 1 <= days; i += f) s.push_back(i);
  return s;
}

/// Start of the trailing partial block when f does not divide K - h.
inline std::optional<std::size_t> inference_remainder(std::size_t days, const WindowConfig& cfg) {
  const auto full = inference_indices(days, cfg);
  const std::size_t next = full.back() + static_cast<std::size_t>(cfg.future);
  if (next <= days) return next;
  return std::nullopt;
}

inline NormStats history_stats(const Tensor& history) {
  if (history.cols() < 1) throw DimensionError("history segment is empty");
  NormStats s;
  const double n = static_cast<double>(history.cols());
  s.mean = history.rowwise().mean();
  s.sd.resize(history.rows());
  for (Index r = 0; r < history.rows(); ++r) {
    const double var = (history.row(r).array() - s.mean(r)).square().sum() / n;
    s.sd(r) = std::max(std::sqrt(var), sigma_floor(s.mean(r)));
  }
  return s;
}

inline void require_stats(const Tensor& block, const NormStats& stats) {
  if (stats.mean.size() != block.rows() || stats.sd.size() != block.rows()) {
    throw DimensionError("normalization stats cover " + std::to_string(stats.mean.size()) +
                         " assets, block is " + shape_string(block));
  }
}

/// (p - mu) / (3 sigma), per asset row.
inline Tensor normalize(const Tensor& block, const NormStats& stats) {
  require_stats(block, stats);
  Tensor out(block.rows(), block.cols());
  for (Index r = 0; r < block.rows(); ++r) {
    out.row(r) = (block.row(r).array() - stats.mean(r)) / (3.0 * stats.sd(r));
  }
  return out;
}

/// p~ * 3 sigma + mu, per asset row.
inline Tensor denormalize(const Tensor& block, const NormStats& stats) {
  require_stats(block, stats);
  Tensor out(block.rows(), block.cols());
  for (Index r = 0; r < block.rows(); ++r) {
    out.row(r) = block.row(r).array() * (3.0 * stats.sd(r)) + stats.mean(r);
  }
  return out;
}

/// Window starting at 1-based day `start`: history is days start .. start+h-1,
/// future the next f days. Both are normalized with the history's stats only.
inline WindowSample extract_window(const PriceMatrix& prices, std::size_t start, const WindowConfig& cfg,
                                   bool with_future) {
  cfg.validate();
  const auto days = static_cast<std::size_t>(prices.days());
  const auto span = static_cast<std::size_t>(with_future ? cfg.width() : cfg.history);
  if (start < 1 || start + span - 1 > days) {
    throw RangeError("window at day " + std::to_string(start) + " spanning " + std::to_string(span) +
                     " days exceeds " + std::to_string(days) + " available days");
  }
  const Index first = static_cast<Index>(start - 1);
  WindowSample w;
  w.index = start;
  const Tensor raw_history = prices.values.middleCols(first, cfg.history);
  w.stats = history_stats(raw_history);
  w.history = normalize(raw_history, w.stats);
  if (with_future) {
    w.future = normalize(prices.values.middleCols(first + cfg.history, cfg.future), w.stats);
  }
  return w;
}

// Row-major (asset-major) flattening of an N x T block into one row.
inline Tensor flatten_row(const Tensor& block) {
  Tensor out(1, block.size());
  for (Index r = 0; r < block.rows(); ++r) {
    for (Index c = 0; c < block.cols(); ++c) out(0, r * block.cols() + c) = block(r, c);
  }
  return out;
}

inline Tensor unflatten_row(const Tensor& flat, Index row, Index assets, Index length) {
  if (flat.cols() != assets * length) {
    throw DimensionError("cannot reshape width " + std::to_string(flat.cols()) + " into " +
                         shape_string(assets, length));
  }
  Tensor out(assets, length);
  for (Index r = 0; r < assets; ++r) {
    for (Index c = 0; c < length; ++c) out(r, c) = flat(row, r * length + c);
  }
  return out;
}

}  // namespace acgan
