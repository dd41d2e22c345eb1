#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/gan.hpp"
#include "acgan/prices.hpp"
#include "acgan/random.hpp"
#include "acgan/train.hpp"
#include "acgan/windows.hpp"

namespace acgan {

// A run of generated days [start, start + length), 1-based.
struct Block {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Full-stride blocks from S2, then the truncated trailing block if f does
/// not divide K - h.
inline std::vector<Block> inference_blocks(std::size_t days, const WindowConfig& cfg) {
  std::vector<Block> blocks;
  const auto f = static_cast<std::size_t>(cfg.future);
  for (std::size_t i : inference_indices(days, cfg)) blocks.push_back({i, f});
  if (const auto tail = inference_remainder(days, cfg)) blocks.push_back({*tail, days - *tail + 1});
  return blocks;
}

struct ScenarioSet {
  PriceMatrix reference;         // X, N x K
  std::vector<Tensor> draws;     // Y_r, each N x K
  std::vector<std::uint64_t> seeds;
  std::vector<Block> blocks;
  WindowConfig window;
  std::string label;             // model mode that produced the draws
  std::string checkpoint_hash;
  std::uint64_t base_seed = 0;
  bool continuity_shift = false;

  std::size_t size() const { return draws.size(); }

  PriceMatrix draw_matrix(std::size_t r) const {
    PriceMatrix p;
    p.tickers = reference.tickers;
    p.dates = reference.dates;
    p.values = draws.at(r);
    return p;
  }
};

struct ScenarioOptions {
  bool require_trained = true;
  // Shift each generated block so that its first day continues from the last
  // observed price. Off by default.
  bool continuity_shift = false;
  // Explicit per-draw seeds, e.g. read back from a manifest.
  std::vector<std::uint64_t> seeds;
  std::string checkpoint_hash;
};

inline std::uint64_t draw_seed(std::uint64_t base, std::size_t r) { return hash_combine(base, r); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Inference: every block is conditioned on the true X[:, i-h .. i-1], never
/// on generated values, normalized with that history's stats, generated with
/// fresh z and de-normalized with the same stats.
inline ScenarioSet generate_scenarios(const GanBundle& b, const PriceMatrix& x, const WindowConfig& cfg,
                                      std::size_t draws, std::uint64_t seed, const ScenarioOptions& options = {}) {
  b.validate();
  validate(x);
  if (options.require_trained && !b.trained()) throw ModeError("bundle has not been trained");
  if (x.assets() != b.dims.assets || cfg.history != b.dims.history || cfg.future != b.dims.future) {
    throw DimensionError("test data " + shape_string(x.values) + " with window (" + std::to_string(cfg.history) +
                         ", " + std::to_string(cfg.future) + ") does not match networks built for " +
                         shape_string(b.dims.assets, b.dims.history) + " history and f=" +
                         std::to_string(b.dims.future));
  }
  if (draws == 0) throw ConfigError("draw count must be at least 1");
  if (!options.seeds.empty() && options.seeds.size() != draws) {
    throw ConfigError("explicit seed list has " + std::to_string(options.seeds.size()) + " entries for " +
                      std::to_string(draws) + " draws");
  }

  const auto days = static_cast<std::size_t>(x.days());
  ScenarioSet set;
  set.reference = x;
  set.window = cfg;
  set.blocks = inference_blocks(days, cfg);
  set.label = to_string(b.mode);
  set.checkpoint_hash = options.checkpoint_hash;
  set.base_seed = seed;
  set.continuity_shift = options.continuity_shift;

  const auto n = x.assets();
  const auto nb = static_cast<Index>(set.blocks.size());
  Tensor histories(nb, b.dims.history_width());
  std::vector<NormStats> stats;
  for (Index k = 0; k < nb; ++k) {
    const std::size_t i = set.blocks[static_cast<std::size_t>(k)].start;
    const WindowSample w = extract_window(x, i - static_cast<std::size_t>(cfg.history), cfg, false);
    histories.row(k) = flatten_row(w.history);
    stats.push_back(w.stats);
  }

  for (std::size_t r = 0; r < draws; ++r) {
    const std::uint64_t s = options.seeds.empty() ? draw_seed(seed, r) : options.seeds[r];
    CounterRng rng(s);
    const Tensor z = normal_matrix(nb, b.dims.latent, rng);
    const Tensor out = generate(b, z, histories, ad::Phase::Infer, rng);

    Tensor y = Tensor::Constant(n, x.days(), std::numeric_limits<double>::quiet_NaN());
    y.leftCols(cfg.history) = x.values.leftCols(cfg.history);
    for (Index k = 0; k < nb; ++k) {
      const Block& blk = set.blocks[static_cast<std::size_t>(k)];
      Tensor prices = denormalize(unflatten_row(out, k, n, cfg.future), stats[static_cast<std::size_t>(k)]);
      if (options.continuity_shift) {
        const Index last = static_cast<Index>(blk.start) - 2;
        for (Index a = 0; a < n; ++a) prices.row(a).array() += x.values(a, last) - prices(a, 0);
      }
      y.middleCols(static_cast<Index>(blk.start) - 1, static_cast<Index>(blk.length)) =
          prices.leftCols(static_cast<Index>(blk.length));
    }
    if (!y.allFinite()) throw NumericError("generated scenario " + std::to_string(r) + " has non-finite prices");
    set.draws.push_back(std::move(y));
    set.seeds.push_back(s);
  }
  return set;
}

inline std::string scenario_file_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scenario_%04zu.csv", r);
  return buf;
}

/// One price file per draw plus manifest.txt (key=value lines).
inline void export_scenarios(const ScenarioSet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream m;
  m << "format=acgan-scenarios\n"
    << "version=1\n"
    << "label=" << set.label << '\n'
    << "checkpoint_hash=" << set.checkpoint_hash << '\n'
    << "assets=" << set.reference.assets() << '\n'
    << "days=" << set.reference.days() << '\n'
    << "history=" << set.window.history << '\n'
    << "future=" << set.window.future << '\n'
    << "draws=" << set.size() << '\n'
    << "base_seed=" << set.base_seed << '\n'
    << "continuity_shift=" << (set.continuity_shift ? 1 : 0) << '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    const std::string file = scenario_file_name(r);
    save_prices(dir / file, set.draw_matrix(r));
    m << "draw." << r << ".seed=" << set.seeds[r] << '\n' << "draw." << r << ".file=" << file << '\n';
  }
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
  out << m.str();
  if (!out) throw IoError("write failed for " + (dir / "manifest.txt").string());
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[std::string(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return kv;
}

namespace detail {

inline const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key,
                                      const std::string& where) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw CorruptionError(where + ": missing key '" + key + "'");
  return it->second;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError(what + ": '" + s + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace detail

/// Reads a directory written by export_scenarios and checks every draw
/// against the reference test matrix.
inline ScenarioSet load_scenarios(const std::filesystem::path& dir, const PriceMatrix& reference) {
  const auto manifest = dir / "manifest.txt";
  const auto kv = read_key_values(manifest);
  const std::string where = manifest.string();
  if (detail::require_key(kv, "format", where) != "acgan-scenarios") throw CorruptionError(where + ": unknown format");
  if (detail::require_key(kv, "version", where) != "1") throw VersionError(where + ": unsupported manifest version");

  ScenarioSet set;
  set.reference = reference;
  set.label = detail::require_key(kv, "label", where);
  set.checkpoint_hash = kv.count("checkpoint_hash") ? kv.at("checkpoint_hash") : "";
  set.window.history = static_cast<Index>(detail::parse_u64(detail::require_key(kv, "history", where), "history"));
  set.window.future = static_cast<Index>(detail::parse_u64(detail::require_key(kv, "future", where), "future"));
  set.base_seed = detail::parse_u64(detail::require_key(kv, "base_seed", where), "base_seed");
  set.continuity_shift = detail::require_key(kv, "continuity_shift", where) == "1";
  const std::size_t draws = detail::parse_u64(detail::require_key(kv, "draws", where), "draws");
  set.blocks = inference_blocks(static_cast<std::size_t>(reference.days()), set.window);

  for (std::size_t r = 0; r < draws; ++r) {
    const std::string key = "draw." + std::to_string(r);
    set.seeds.push_back(detail::parse_u64(detail::require_key(kv, key + ".seed", where), key + ".seed"));
    const PriceMatrix y = load_prices(dir / detail::require_key(kv, key + ".file", where));
    if (y.tickers != reference.tickers || y.dates != reference.dates) {
      throw AlignmentError("scenario " + std::to_string(r) + " (" + shape_string(y.values) +
                           ") is not aligned with the test data (" + shape_string(reference.values) + ")");
    }
    set.draws.push_back(y.values);
  }
  return set;
}

}  // namespace acgan
