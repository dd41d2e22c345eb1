#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acgan/backtest.hpp"
#include "acgan/checkpoint.hpp"
#include "acgan/errors.hpp"
#include "acgan/gan.hpp"
#include "acgan/prices.hpp"
#include "acgan/scenarios.hpp"
#include "acgan/stylized_facts.hpp"
#include "acgan/svg.hpp"
#include "acgan/synthetic.hpp"
#include "acgan/train.hpp"

namespace acgan {

namespace fs = std::filesystem;

inline constexpr const char* kOutDirEnv = "ACGAN_OUT_DIR";

/// Every knob of the command-line tool. Paths left empty fall back to
/// defaults under the output directory.
struct RunConfig {
  fs::path train_file;
  fs::path test_file;
  fs::path checkpoint;
  fs::path out_dir;
  std::vector<fs::path> scenario_dirs;
  WindowConfig window;
  TrainConfig train;
  GanMode mode = GanMode::Acgan;
  Index arch_cap = 0;  // 0 keeps the full architecture
  std::size_t draws = 1000;
  std::vector<std::size_t> etas{10, 15, 20};
  std::uint64_t seed = 0;
  std::vector<std::string> benchmarks;
  bool continuity_shift = false;
  bool charts = true;
  // simulate
  Index sim_assets = 4;
  Index sim_train_days = 1000;
  Index sim_test_days = 400;

  fs::path output() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "acgan-out";
  }
  fs::path checkpoint_path() const {
    return checkpoint.empty() ? output() / ("checkpoint_" + std::string(to_string(mode)) + ".acg") : checkpoint;
  }
  fs::path default_scenario_dir(GanMode m) const { return output() / ("scenarios_" + std::string(to_string(m))); }

  void validate() const {
    window.validate();
    train.validate();
    if (draws < 1) throw ConfigError("draws must be at least 1");
    if (etas.empty()) throw ConfigError("at least one rebalance interval is required");
    for (std::size_t e : etas) {
      if (e < 1) throw ConfigError("rebalance intervals must be at least 1");
    }
    if (arch_cap < 0) throw ConfigError("arch_cap must be non-negative");
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("value '" + v + "' for '" + key + "' is not a valid number");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("value '" + v + "' for '" + key + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto cell : split_csv_line(v)) {
    const auto t = trim(cell);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "train") c.train_file = value;
  else if (key == "test") c.test_file = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "out") c.out_dir = value;
  else if (key == "scenarios") {
    c.scenario_dirs.clear();
    for (const auto& s : detail::split_list(value)) c.scenario_dirs.emplace_back(s);
  } else if (key == "history") c.window.history = parse_number<Index>(key, value);
  else if (key == "future") c.window.future = parse_number<Index>(key, value);
  else if (key == "latent") c.train.latent = parse_number<Index>(key, value);
  else if (key == "lambda1") c.train.lambda1 = parse_number<double>(key, value);
  else if (key == "lambda2") c.train.lambda2 = parse_number<double>(key, value);
  else if (key == "lr") c.train.adam.learning_rate = parse_number<double>(key, value);
  else if (key == "beta1") c.train.adam.beta1 = parse_number<double>(key, value);
  else if (key == "beta2") c.train.adam.beta2 = parse_number<double>(key, value);
  else if (key == "epsilon") c.train.adam.epsilon = parse_number<double>(key, value);
  else if (key == "epochs") c.train.epochs = parse_number<std::size_t>(key, value);
  else if (key == "critic_steps") c.train.critic_steps = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") c.train.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "arch_cap") c.arch_cap = parse_number<Index>(key, value);
  else if (key == "draws") c.draws = parse_number<std::size_t>(key, value);
  else if (key == "eta") {
    c.etas.clear();
    for (const auto& s : detail::split_list(value)) c.etas.push_back(parse_number<std::size_t>(key, s));
  } else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "benchmarks") c.benchmarks = detail::split_list(value);
  else if (key == "continuity_shift") c.continuity_shift = detail::parse_bool(key, value);
  else if (key == "charts") c.charts = detail::parse_bool(key, value);
  else if (key == "sim_assets") c.sim_assets = parse_number<Index>(key, value);
  else if (key == "sim_train_days") c.sim_train_days = parse_number<Index>(key, value);
  else if (key == "sim_test_days") c.sim_test_days = parse_number<Index>(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

inline void load_config_file(RunConfig& c, const fs::path& path) {
  for (const auto& [key, value] : read_key_values(path)) apply_setting(c, key, value);
}

inline void echo_config(std::ostream& out, const RunConfig& c) {
  const auto join = [](const auto& items) {
    std::string s;
    for (const auto& x : items) {
      if (!s.empty()) s += ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(x)>, fs::path>) s += x.string();
      else if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::string>) s += x;
      else s += std::to_string(x);
    }
    return s;
  };
  out << "train=" << c.train_file.string() << '\n'
      << "test=" << c.test_file.string() << '\n'
      << "checkpoint=" << c.checkpoint_path().string() << '\n'
      << "history=" << c.window.history << '\n'
      << "future=" << c.window.future << '\n'
      << "latent=" << c.train.latent << '\n'
      << "lambda1=" << format_double(c.train.lambda1) << '\n'
      << "lambda2=" << format_double(c.train.lambda2) << '\n'
      << "lr=" << format_double(c.train.adam.learning_rate) << '\n'
      << "beta1=" << format_double(c.train.adam.beta1) << '\n'
      << "beta2=" << format_double(c.train.adam.beta2) << '\n'
      << "epsilon=" << format_double(c.train.adam.epsilon) << '\n'
      << "epochs=" << c.train.epochs << '\n'
      << "critic_steps=" << c.train.critic_steps << '\n'
      << "batch_size=" << c.train.batch_size << '\n'
      << "arch_cap=" << c.arch_cap << '\n'
      << "mode=" << to_string(c.mode) << '\n'
      << "draws=" << c.draws << '\n'
      << "eta=" << join(c.etas) << '\n'
      << "seed=" << c.seed << '\n'
      << "benchmarks=" << join(c.benchmarks) << '\n'
      << "continuity_shift=" << (c.continuity_shift ? 1 : 0) << '\n';
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename F>
void write_with(const fs::path& path, F&& fill) {
  std::ostringstream s;
  fill(s);
  write_text(path, s.str());
}

inline PriceMatrix require_prices(const fs::path& path, const char* role) {
  if (path.empty()) throw ConfigError(std::string("no ") + role + " file given (set '" + role + "=')");
  PriceMatrix p = load_prices(path);
  validate(p);
  return p;
}

inline void cmd_simulate(const RunConfig& c, std::ostream& log = std::cerr) {
  GbmConfig g;
  g.assets = c.sim_assets;
  g.days = c.sim_train_days + c.sim_test_days;
  g.seed = c.seed;
  const PriceMatrix all = simulate_gbm(g);
  const fs::path dir = c.output();
  write_with(dir / "train.csv", [&](std::ostream& o) { write_prices(o, all.slice_days(0, c.sim_train_days)); });
  write_with(dir / "test.csv",
             [&](std::ostream& o) { write_prices(o, all.slice_days(c.sim_train_days, c.sim_test_days)); });
  log << "simulated " << g.assets << " assets: " << (dir / "train.csv").string() << ", "
      << (dir / "test.csv").string() << '\n';
}

inline void cmd_train(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const PriceMatrix m = require_prices(c.train_file, "train");
  CounterRng rng(c.seed);
  const Architecture arch = c.arch_cap > 0 ? Architecture::shrunk(c.arch_cap) : Architecture{};
  GanBundle b = build_networks(m.assets(), c.window, c.train.latent, c.mode, rng, arch, c.train.adam);
  TrainConfig tc = c.train;
  tc.seed = c.seed;
  TrainOptions opts;
  opts.checkpoint_path = c.checkpoint_path();
  fs::create_directories(opts.checkpoint_path->parent_path().empty() ? fs::path(".")
                                                                     : opts.checkpoint_path->parent_path());
  opts.on_epoch = [&](const LossRecord& r) {
    if (r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == tc.epochs) {
      log << "epoch " << r.epoch << " critic " << r.critic_loss << " generator " << r.generator_loss;
      if (r.autoencoding) log << " ap " << *r.autoencoding;
      log << '\n';
    }
    return true;
  };
  const TrainResult res = train(b, m, tc, c.window, opts);
  const std::string mode = to_string(c.mode);
  write_with(c.output() / ("loss_history_" + mode + ".csv"), [&](std::ostream& o) { write_loss_history(o, res.history); });
  write_with(c.output() / ("train_config_" + mode + ".txt"), [&](std::ostream& o) { echo_config(o, c); });
}

inline fs::path scenario_dir_for(const RunConfig& c) {
  return c.scenario_dirs.empty() ? c.default_scenario_dir(c.mode) : c.scenario_dirs.front();
}

inline void cmd_generate(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const PriceMatrix x = require_prices(c.test_file, "test");
  const fs::path ckpt = c.checkpoint_path();
  const GanBundle b = load_checkpoint(ckpt, c.mode);
  ScenarioOptions opts;
  opts.continuity_shift = c.continuity_shift;
  opts.checkpoint_hash = hex64(file_digest(ckpt));
  const ScenarioSet set = generate_scenarios(b, x, c.window, c.draws, c.seed, opts);
  const fs::path dir = scenario_dir_for(c);
  export_scenarios(set, dir);
  log << "wrote " << set.size() << " scenarios to " << dir.string() << '\n';
}

// Explicit scenario directories, or whichever default ones exist.
inline std::vector<fs::path> scenario_dirs(const RunConfig& c, bool required) {
  std::vector<fs::path> dirs = c.scenario_dirs;
  if (dirs.empty()) {
    for (GanMode m : {GanMode::Acgan, GanMode::Cgan}) {
      if (fs::exists(c.default_scenario_dir(m) / "manifest.txt")) dirs.push_back(c.default_scenario_dir(m));
    }
  }
  if (required && dirs.empty()) throw ConfigError("no scenario directories found; run 'generate' or set 'scenarios='");
  return dirs;
}

inline void cmd_stats(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const PriceMatrix x = require_prices(c.test_file, "test");
  const fs::path dir = c.output() / "stats";
  bool wrote_real = false;
  for (const fs::path& sd : scenario_dirs(c, true)) {
    const ScenarioSet set = load_scenarios(sd, x);
    const ScenarioEvaluation ev = evaluate_scenarios(set);
    if (!wrote_real) {
      write_with(dir / "facts_real.csv", [&](std::ostream& o) { write_fact_table(o, ev.real); });
      wrote_real = true;
    }
    write_with(dir / ("facts_" + set.label + ".csv"), [&](std::ostream& o) { write_fact_table(o, ev.synthetic); });
    write_with(dir / ("cross_" + set.label + ".csv"),
               [&](std::ostream& o) { write_cross_table(o, ev.real, ev.synthetic, ev.tickers); });
    write_with(dir / ("pearson_" + set.label + ".csv"), [&](std::ostream& o) { write_pearson_table(o, ev); });
    for (const auto& w : ev.real.warnings) log << "warning: real: " << w << '\n';
    for (const auto& w : ev.synthetic.warnings) log << "warning: " << set.label << ": " << w << '\n';
  }
}

inline std::vector<svg::Series> equity_series(const std::vector<BacktestReport>& reports, std::size_t benchmarks) {
  std::vector<svg::Series> out;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    svg::Series s;
    s.label = reports[k].label;
    s.dashed = k >= reports.size() - benchmarks;
    for (Index d = 0; d < reports[k].equity.size(); ++d) {
      s.x.push_back(static_cast<double>(reports[k].first_day + static_cast<std::size_t>(d)));
      s.y.push_back(reports[k].equity(d));
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline void cmd_backtest(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const PriceMatrix x = require_prices(c.test_file, "test");
  const auto history = static_cast<std::size_t>(c.window.history);
  std::vector<ScenarioSet> sets;
  for (const fs::path& sd : scenario_dirs(c, false)) {
    sets.push_back(load_scenarios(sd, x));
    if (sets.back().window.history != c.window.history) {
      throw AlignmentError("scenarios in " + sd.string() + " use h=" + std::to_string(sets.back().window.history) +
                           ", config has h=" + std::to_string(c.window.history));
    }
  }
  std::vector<std::size_t> bench;
  for (const std::string& t : c.benchmarks) {
    const auto it = std::find(x.tickers.begin(), x.tickers.end(), t);
    if (it == x.tickers.end()) throw ConfigError("benchmark '" + t + "' is not a column of the test file");
    bench.push_back(static_cast<std::size_t>(it - x.tickers.begin()));
  }

  const fs::path dir = c.output() / "backtest";
  for (std::size_t eta : c.etas) {
    const std::string tag = "_eta" + std::to_string(eta);
    std::vector<BacktestReport> reports;
    std::ostringstream scatter;
    scatter << "strategy,eta,draw,annual_return,sharpe_ratio\n";
    for (const ScenarioSet& set : sets) {
      ScenarioBacktest bt = backtest_scenarios(set, eta, set.label);
      write_scatter(scatter, set.label, bt);
      reports.push_back(std::move(bt.mean));
    }
    reports.push_back(backtest_markowitz(x, history, eta));
    for (std::size_t a : bench) reports.push_back(buy_and_hold(x, a, history));

    write_with(dir / ("summary" + tag + ".csv"), [&](std::ostream& o) { write_summary(o, reports); });
    write_with(dir / ("equity_long" + tag + ".csv"), [&](std::ostream& o) { write_equity_long(o, reports); });
    for (const BacktestReport& r : reports) {
      write_with(dir / ("equity_" + r.label + tag + ".csv"), [&](std::ostream& o) { write_equity(o, r, x); });
      write_with(dir / ("weights_" + r.label + tag + ".csv"), [&](std::ostream& o) { write_weights(o, r, x.tickers); });
      for (const auto& w : r.warnings) log << "warning: " << r.label << tag << ": " << w << '\n';
    }
    if (!sets.empty()) write_text(dir / ("scatter" + tag + ".csv"), scatter.str());
    if (c.charts) {
      write_with(dir / ("equity" + tag + ".svg"), [&](std::ostream& o) {
        svg::line_chart(o, equity_series(reports, bench.size()), "Portfolio value, eta = " + std::to_string(eta),
                        "day", "value");
      });
    }
  }
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> row;
    for (auto cell : split_csv_line(line)) row.emplace_back(trim(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double cell_value(const std::string& s) {
  double v = std::numeric_limits<double>::quiet_NaN();
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace detail

/// Charts and a markdown digest from the files written by backtest and stats.
inline void cmd_report(const RunConfig& c, std::ostream& log = std::cerr) {
  c.validate();
  const fs::path bdir = c.output() / "backtest";
  const fs::path sdir = c.output() / "stats";
  std::ostringstream md;
  md << "# Report\n";
  bool any = false;
  for (std::size_t eta : c.etas) {
    const std::string tag = "_eta" + std::to_string(eta);
    const fs::path summary = bdir / ("summary" + tag + ".csv");
    if (!fs::exists(summary)) continue;
    any = true;
    md << "\n## Backtest, eta = " << eta << "\n\n";
    const auto rows = detail::read_csv_rows(summary);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      md << '|';
      for (const auto& cell : rows[r]) md << ' ' << cell << " |";
      md << '\n';
      if (r == 0) {
        md << '|';
        for (std::size_t k = 0; k < rows[r].size(); ++k) md << " --- |";
        md << '\n';
      }
    }

    const fs::path long_file = bdir / ("equity_long" + tag + ".csv");
    if (fs::exists(long_file)) {
      std::vector<svg::Series> series;
      const auto lrows = detail::read_csv_rows(long_file);
      for (std::size_t r = 1; r < lrows.size(); ++r) {
        if (lrows[r].size() < 3) continue;
        if (series.empty() || series.back().label != lrows[r][1]) series.push_back({lrows[r][1], {}, {}, false});
        series.back().x.push_back(detail::cell_value(lrows[r][0]));
        series.back().y.push_back(detail::cell_value(lrows[r][2]));
      }
      for (std::size_t k = 0; k < series.size(); ++k) {
        const std::string& label = series[k].label;
        series[k].dashed = label != "markowitz" && label.find("-mean") == std::string::npos;
      }
      write_with(c.output() / "report" / ("equity" + tag + ".svg"), [&](std::ostream& o) {
        svg::line_chart(o, series, "Portfolio value, eta = " + std::to_string(eta), "day", "value");
      });
      md << "\n![equity](equity" << tag << ".svg)\n";
    }
    const fs::path scatter_file = bdir / ("scatter" + tag + ".csv");
    if (fs::exists(scatter_file)) {
      std::vector<svg::Series> series;
      const auto srows = detail::read_csv_rows(scatter_file);
      for (std::size_t r = 1; r < srows.size(); ++r) {
        if (srows[r].size() < 5) continue;
        if (series.empty() || series.back().label != srows[r][0]) series.push_back({srows[r][0], {}, {}, false});
        series.back().x.push_back(detail::cell_value(srows[r][4]));
        series.back().y.push_back(detail::cell_value(srows[r][3]));
      }
      write_with(c.output() / "report" / ("scatter" + tag + ".svg"), [&](std::ostream& o) {
        svg::scatter_chart(o, series, "Annual return vs Sharpe ratio, eta = " + std::to_string(eta), "Sharpe ratio",
                           "annual return");
      });
      md << "\n![scatter](scatter" << tag << ".svg)\n";
    }
  }
  if (fs::exists(sdir)) {
    std::vector<fs::path> tables;
    for (const auto& e : fs::directory_iterator(sdir)) {
      if (e.path().extension() == ".csv") tables.push_back(e.path());
    }
    std::sort(tables.begin(), tables.end());
    for (const fs::path& t : tables) {
      any = true;
      md << "\n## " << t.stem().string() << "\n\n";
      const auto rows = detail::read_csv_rows(t);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        md << '|';
        for (const auto& cell : rows[r]) md << ' ' << cell << " |";
        md << '\n';
        if (r == 0) {
          md << '|';
          for (std::size_t k = 0; k < rows[r].size(); ++k) md << " --- |";
          md << '\n';
        }
      }
    }
  }
  if (!any) throw ConfigError("nothing to report under " + c.output().string() + "; run 'backtest' or 'stats' first");
  write_text(c.output() / "report" / "report.md", md.str());
  log << "wrote " << (c.output() / "report" / "report.md").string() << '\n';
}

}  // namespace acgan
