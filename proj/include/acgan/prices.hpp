#pragma once

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

/// N x D adjusted closing prices: one row per ticker, one column per trading
/// day (dates ISO-8601, strictly increasing).
struct PriceMatrix {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;
  Tensor values;

  Index assets() const { return values.rows(); }
  Index days() const { return values.cols(); }

  // Days [first, first + count), 0-based.
  PriceMatrix slice_days(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > days()) {
      throw RangeError("slice_days: [" + std::to_string(first) + ", " + std::to_string(first + count) +
                       ") outside " + std::to_string(days()) + " days");
    }
    PriceMatrix out;
    out.tickers = tickers;
    out.dates.assign(dates.begin() + first, dates.begin() + first + count);
    out.values = values.middleCols(first, count);
    return out;
  }
};

namespace detail {

inline bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0, m = 0, d = 0;
  if (std::from_chars(s.data(), s.data() + 4, y).ptr != s.data() + 4) return false;
  if (std::from_chars(s.data() + 5, s.data() + 7, m).ptr != s.data() + 7) return false;
  if (std::from_chars(s.data() + 8, s.data() + 10, d).ptr != s.data() + 10) return false;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  return ymd.ok();
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void validate(const PriceMatrix& p) {
  if (static_cast<Index>(p.tickers.size()) != p.values.rows() ||
      static_cast<Index>(p.dates.size()) != p.values.cols()) {
    throw DimensionError("price matrix labels do not match " + shape_string(p.values));
  }
  for (std::size_t d = 0; d < p.dates.size(); ++d) {
    if (!detail::valid_iso_date(p.dates[d])) throw IngestionError("invalid date '" + p.dates[d] + "'");
    if (d > 0 && !(p.dates[d - 1] < p.dates[d])) {
      throw OrderingError("dates not strictly increasing at " + p.dates[d]);
    }
  }
  for (Index c = 0; c < p.values.cols(); ++c) {
    for (Index r = 0; r < p.values.rows(); ++r) {
      const double v = p.values(r, c);
      if (!std::isfinite(v) || v <= 0.0) {
        throw DomainError("price for " + p.tickers[static_cast<std::size_t>(r)] + " on " +
                          p.dates[static_cast<std::size_t>(c)] + " is not a positive number");
      }
    }
  }
}

/// Parses "date,<ticker1>,...,<tickerN>" comma-separated text.
inline PriceMatrix parse_prices(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  PriceMatrix p;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (line_no == 0 || detail::trim(line).empty()) throw IngestionError(source + ": empty price file");

  const auto header = detail::split_csv_line(line);
  if (detail::trim(header[0]) != "date") {
    throw IngestionError(source + ": header must start with 'date'");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto t = detail::trim(header[c]);
    if (t.empty()) throw IngestionError(source + ": empty ticker name in header column " + std::to_string(c + 1));
    p.tickers.emplace_back(t);
  }
  if (p.tickers.empty()) throw IngestionError(source + ": no ticker columns");

  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() > p.tickers.size() + 1) {
      throw IngestionError(source + ": row " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(p.tickers.size() + 1));
    }
    const auto date = detail::trim(cells[0]);
    if (date.empty()) {
      throw IngestionError(source + ": missing cell at row " + std::to_string(line_no) + ", column 1 (date)");
    }
    if (!detail::valid_iso_date(date)) {
      throw IngestionError(source + ": row " + std::to_string(line_no) + ": invalid date '" +
                           std::string(date) + "'");
    }
    if (!p.dates.empty() && !(p.dates.back() < date)) {
      throw OrderingError(source + ": row " + std::to_string(line_no) + ": date " + std::string(date) +
                          " does not follow " + p.dates.back());
    }
    p.dates.emplace_back(date);
    for (std::size_t c = 1; c <= p.tickers.size(); ++c) {
      const std::string where = "row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                " (" + p.tickers[c - 1] + ")";
      const auto cell = c < cells.size() ? detail::trim(cells[c]) : std::string_view{};
      if (cell.empty()) throw IngestionError(source + ": missing cell at " + where);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw IngestionError(source + ": non-numeric cell '" + std::string(cell) + "' at " + where);
      }
      if (!std::isfinite(v) || v <= 0.0) {
        throw DomainError(source + ": non-positive price " + std::string(cell) + " at " + where);
      }
      flat.push_back(v);
    }
  }
  const Index n = static_cast<Index>(p.tickers.size());
  const Index d = static_cast<Index>(p.dates.size());
  p.values.resize(n, d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < n; ++r) p.values(r, c) = flat[static_cast<std::size_t>(c * n + r)];
  }
  return p;
}

inline PriceMatrix load_prices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open price file " + path.string());
  return parse_prices(in, path.string());
}

inline void write_prices(std::ostream& out, const PriceMatrix& p) {
  out << "date";
  for (const auto& t : p.tickers) out << ',' << t;
  out << '\n';
  for (Index c = 0; c < p.days(); ++c) {
    out << p.dates[static_cast<std::size_t>(c)];
    for (Index r = 0; r < p.assets(); ++r) out << ',' << format_double(p.values(r, c));
    out << '\n';
  }
}

inline void save_prices(const std::filesystem::path& path, const PriceMatrix& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write price file " + path.string());
  write_prices(out, p);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace acgan
