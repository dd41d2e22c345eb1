#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "acgan/scenarios.hpp"
#include "acgan/synthetic.hpp"
#include "acgan/train.hpp"

using namespace acgan;
namespace fs = std::filesystem;

namespace {

PriceMatrix test_prices(Index assets, Index days, std::uint64_t seed) {
  GbmConfig g;
  g.assets = assets;
  g.days = days;
  g.seed = seed;
  return simulate_gbm(g);
}

GanBundle bundle(Index assets, const WindowConfig& w, GanMode mode = GanMode::Acgan) {
  CounterRng rng(4);
  GanBundle b = build_networks(assets, w, 5, mode, rng, Architecture::shrunk(16));
  b.epochs_completed = 1;
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("acgan_scen_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Scenarios, FullHorizonBlocks) {
  const WindowConfig w{40, 20};
  const auto blocks = inference_blocks(800, w);
  ASSERT_EQ(blocks.size(), 38u);
  EXPECT_EQ(blocks.front().start, 41u);
  EXPECT_EQ(blocks.back().start + blocks.back().length - 1, 800u);

  const auto tail = inference_blocks(805, w);
  ASSERT_EQ(tail.size(), 39u);
  EXPECT_EQ(tail.back().start, 801u);
  EXPECT_EQ(tail.back().length, 5u);
}

TEST(Scenarios, CopiesHistoryAndFillsEveryDay) {
  const WindowConfig w{10, 4};
  const PriceMatrix x = test_prices(3, 57, 1);
  const ScenarioSet s = generate_scenarios(bundle(3, w), x, w, 3, 9);
  ASSERT_EQ(s.size(), 3u);
  for (const Tensor& y : s.draws) {
    ASSERT_EQ(y.rows(), 3);
    ASSERT_EQ(y.cols(), 57);
    EXPECT_EQ(std::memcmp(y.data(), x.values.data(), sizeof(double) * 30), 0);
    EXPECT_TRUE(y.allFinite());
  }
  std::size_t covered = 10;
  for (const Block& b : s.blocks) {
    EXPECT_EQ(b.start, covered + 1);
    covered += b.length;
  }
  EXPECT_EQ(covered, 57u);
  EXPECT_EQ(s.blocks.back().length, 3u);
}

TEST(Scenarios, DistinctSeedsDistinctDraws) {
  const WindowConfig w{10, 4};
  const PriceMatrix x = test_prices(2, 50, 2);
  const ScenarioSet s = generate_scenarios(bundle(2, w), x, w, 2, 3);
  EXPECT_NE(s.seeds[0], s.seeds[1]);
  EXPECT_NE(s.draws[0].rightCols(40), s.draws[1].rightCols(40));
  EXPECT_EQ(s.seeds[1], draw_seed(3, 1));
}

TEST(Scenarios, EachBlockDependsOnlyOnItsHistory) {
  const WindowConfig w{8, 4};
  const GanBundle b = bundle(2, w);
  const PriceMatrix x = test_prices(2, 40, 3);
  const ScenarioSet s = generate_scenarios(b, x, w, 1, 5);

  CounterRng rng(s.seeds[0]);
  const Tensor z = normal_matrix(static_cast<Index>(s.blocks.size()), 5, rng);
  for (std::size_t k = 0; k < s.blocks.size(); ++k) {
    const Block& blk = s.blocks[k];
    const Tensor hist = x.values.middleCols(static_cast<Index>(blk.start) - 9, 8);
    const NormStats stats = history_stats(hist);
    CounterRng unused(0);
    const Tensor gen = generate_window(b, z.row(static_cast<Index>(k)).transpose(), normalize(hist, stats),
                                       ad::Phase::Infer, unused);
    const Tensor expect = denormalize(gen, stats).leftCols(static_cast<Index>(blk.length));
    const Tensor got = s.draws[0].middleCols(static_cast<Index>(blk.start) - 1, static_cast<Index>(blk.length));
    EXPECT_LE((got - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
  }

  // Perturbing days at or after a block's first day leaves that block alone.
  PriceMatrix later = x;
  later.values.rightCols(40 - 20) *= 1.5;
  const ScenarioSet t = generate_scenarios(b, later, w, 1, 5);
  EXPECT_EQ(t.draws[0].middleCols(8, 12), s.draws[0].middleCols(8, 12));
}

TEST(Scenarios, ContinuityShiftAnchorsBlocks) {
  const WindowConfig w{8, 4};
  const PriceMatrix x = test_prices(2, 40, 4);
  ScenarioOptions o;
  o.continuity_shift = true;
  const ScenarioSet s = generate_scenarios(bundle(2, w), x, w, 1, 5, o);
  for (const Block& blk : s.blocks) {
    const Index c = static_cast<Index>(blk.start) - 1;
    EXPECT_NEAR(s.draws[0](0, c), x.values(0, c - 1), 1e-9);
  }
}

TEST(Scenarios, Preconditions) {
  const WindowConfig w{8, 4};
  GanBundle b = bundle(2, w);
  const PriceMatrix x = test_prices(2, 40, 5);
  EXPECT_THROW(generate_scenarios(b, test_prices(3, 40, 5), w, 1, 1), DimensionError);
  EXPECT_THROW(generate_scenarios(b, x, WindowConfig{8, 5}, 1, 1), DimensionError);
  EXPECT_THROW(generate_scenarios(b, test_prices(2, 11, 5), w, 1, 1), ConfigError);
  EXPECT_THROW(generate_scenarios(b, x, w, 0, 1), ConfigError);
  b.epochs_completed = 0;
  EXPECT_THROW(generate_scenarios(b, x, w, 1, 1), ModeError);
  ScenarioOptions o;
  o.require_trained = false;
  EXPECT_NO_THROW(generate_scenarios(b, x, w, 1, 1, o));
}

TEST(Scenarios, ExportLoadAndRegenerate) {
  TempDir dir;
  const WindowConfig w{8, 4};
  const GanBundle b = bundle(2, w);
  const PriceMatrix x = test_prices(2, 42, 6);
  const ScenarioSet s = generate_scenarios(b, x, w, 3, 8);
  export_scenarios(s, dir.path / "a");

  const ScenarioSet back = load_scenarios(dir.path / "a", x);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.seeds, s.seeds);
  EXPECT_EQ(back.label, "acgan");
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(back.draws[r], s.draws[r]);

  const auto kv = read_key_values(dir.path / "a" / "manifest.txt");
  EXPECT_EQ(kv.at("draws"), "3");
  EXPECT_EQ(kv.count("draw.2.seed"), 1u);

  ScenarioOptions o;
  o.seeds = back.seeds;
  export_scenarios(generate_scenarios(b, x, w, 3, back.base_seed, o), dir.path / "b");
  for (const char* f : {"manifest.txt", "scenario_0000.csv", "scenario_0002.csv"}) {
    EXPECT_EQ(slurp(dir.path / "a" / f), slurp(dir.path / "b" / f)) << f;
  }

  EXPECT_THROW(load_scenarios(dir.path / "a", test_prices(2, 41, 6)), AlignmentError);
  EXPECT_THROW(load_scenarios(dir.path / "none", x), IoError);
}
