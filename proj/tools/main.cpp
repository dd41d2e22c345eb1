#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "acgan/commands.hpp"

namespace {

using acgan::RunConfig;

// Flag values are collected as strings and applied after the config file so
// that flags always win.
struct Overrides {
  std::string config;
  std::string seed, mode, draws, eta, out;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key=value configuration file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--mode", o.mode, "cgan or acgan");
  cmd->add_option("--draws", o.draws, "number of scenario draws");
  cmd->add_option("--eta", o.eta, "rebalance intervals, comma separated");
  cmd->add_option("--out", o.out, "output directory (default $ACGAN_OUT_DIR or ./acgan-out)");
  cmd->add_option("--set", o.settings, "extra key=value setting, repeatable");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) acgan::load_config_file(c, o.config);
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw acgan::ConfigError("--set expects key=value, got '" + s + "'");
    acgan::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.seed.empty()) acgan::apply_setting(c, "seed", o.seed);
  if (!o.mode.empty()) acgan::apply_setting(c, "mode", o.mode);
  if (!o.draws.empty()) acgan::apply_setting(c, "draws", o.draws);
  if (!o.eta.empty()) acgan::apply_setting(c, "eta", o.eta);
  if (!o.out.empty()) acgan::apply_setting(c, "out", o.out);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional GAN scenario generation and Sharpe-ratio backtesting"};
  app.require_subcommand(1);
  Overrides o;
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"train", "train a cgan/acgan model and write a checkpoint", acgan::cmd_train},
      {"generate", "generate scenario draws over the test horizon", acgan::cmd_generate},
      {"stats", "stylized facts and correlation tables", acgan::cmd_stats},
      {"backtest", "rebalanced portfolio backtests", acgan::cmd_backtest},
      {"report", "charts and a markdown digest of earlier outputs", acgan::cmd_report},
      {"simulate", "write a synthetic geometric Brownian train/test pair", acgan::cmd_simulate},
  };
  for (const Command& c : commands) add_common(app.add_subcommand(c.name, c.help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 1;
  }

  try {
    const RunConfig cfg = resolve(o);
    for (const Command& c : commands) {
      if (app.got_subcommand(c.name)) c.run(cfg, std::cerr);
    }
  } catch (const acgan::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind(), e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: io: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
