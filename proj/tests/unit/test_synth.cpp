#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gaitmtl/dataset.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/labeler.hpp"
#include "gaitmtl/synth.hpp"

namespace gaitmtl {
namespace {

TrialCondition condition(Terrain t, double bpm, double dur = 20.0, std::uint64_t seed = 1) {
  TrialCondition c;
  c.terrain = t;
  c.cadence_bpm = bpm;
  c.duration_s = dur;
  c.seed = seed;
  return c;
}

DatasetConfig small_config() {
  DatasetConfig c;
  c.cadences_bpm = {90.0};
  c.trial_duration_s = 20.0;
  c.tc_stride = 5;
  return c;
}

TEST(TerrainTest, Codes) {
  EXPECT_EQ(terrain_code(Terrain::kStairAscent), "SA");
  EXPECT_EQ(parse_terrain("SD"), Terrain::kStairDescent);
  EXPECT_THROW(parse_terrain("XX"), Error);
}

TEST(GenerateTrialTest, SampleCountAndTimestamps) {
  const auto trial = generate_trial(condition(Terrain::kLevel, 110, 12.5), GaitModelParams::defaults());
  ASSERT_EQ(trial.imu.size(), 625u);
  ASSERT_EQ(trial.fsr.size(), 625u);
  for (std::size_t i = 0; i < trial.imu.size(); ++i) {
    EXPECT_DOUBLE_EQ(trial.imu[i].t, static_cast<double>(i) / 50.0);
    EXPECT_EQ(trial.fsr[i].t, trial.imu[i].t);
  }
}

TEST(GenerateTrialTest, DeterministicPerSeed) {
  const auto p = GaitModelParams::defaults();
  const auto a = generate_trial(condition(Terrain::kStairAscent, 90, 10, 5), p);
  const auto b = generate_trial(condition(Terrain::kStairAscent, 90, 10, 5), p);
  const auto c = generate_trial(condition(Terrain::kStairAscent, 90, 10, 6), p);
  EXPECT_EQ(a.imu.back().lin_acc, b.imu.back().lin_acc);
  EXPECT_EQ(a.fsr[100].front, b.fsr[100].front);
  EXPECT_NE(a.imu.back().lin_acc, c.imu.back().lin_acc);
}

TEST(GenerateTrialTest, StartsInStanceAndCadenceSetsStrideCount) {
  for (double bpm : kDefaultCadencesBpm) {
    const auto trial = generate_trial(condition(Terrain::kLevel, bpm, 40), GaitModelParams::defaults());
    EXPECT_GT(trial.fsr.front().front + trial.fsr.front().back, 0.5);
    std::size_t lifts = 0;
    for (const auto& e : trial.truth_events) lifts += e.kind == GaitEventKind::kFootLift;
    const double expected = 40.0 * bpm / 120.0;
    EXPECT_NEAR(static_cast<double>(lifts), expected, 1.5) << bpm;
  }
}

TEST(GenerateTrialTest, DetectedEventsTrackGeneratorTruth) {
  for (auto terrain : kAllTerrains) {
    for (double bpm : {70.0, 130.0}) {
      const auto trial = generate_trial(condition(terrain, bpm, 30, 3), GaitModelParams::defaults());
      const auto events = detect_events(contact_sections(trial.fsr));
      ASSERT_EQ(events.size(), trial.truth_events.size());
      for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(events[i].kind, trial.truth_events[i].kind);
        EXPECT_LE(std::fabs(events[i].t - trial.truth_events[i].t), 0.02 + 1e-9);
      }
    }
  }
}

TEST(GenerateTrialTest, StanceFractionFollowsTerrain) {
  const auto p = GaitModelParams::defaults();
  for (auto terrain : kAllTerrains) {
    const auto trial = generate_trial(condition(terrain, 90, 40, 9), p);
    std::size_t contact = 0;
    for (const auto& s : trial.fsr) contact += (s.front > 0.5 || s.back > 0.5);
    const double want = p.terrains[static_cast<std::size_t>(terrain)].stance_fraction;
    EXPECT_NEAR(static_cast<double>(contact) / trial.fsr.size(), want, 0.03);
  }
}

TEST(GaitModelParamsTest, Validation) {
  auto p = GaitModelParams::defaults();
  p.gain_min = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = GaitModelParams::defaults();
  p.cycle_jitter = 0.6;
  EXPECT_THROW(p.validate(), Error);
  p = GaitModelParams::defaults();
  p.terrains[1].stance_fraction = 1.0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(generate_trial(condition(Terrain::kLevel, 90, 0.5), GaitModelParams::defaults()), Error);
}

TEST(DatasetTest, DefaultGridHasTwelveConditions) {
  const auto conds = grid_conditions(DatasetConfig{});
  ASSERT_EQ(conds.size(), 12u);
  std::set<std::uint64_t> seeds;
  for (const auto& c : conds) seeds.insert(c.seed);
  EXPECT_EQ(seeds.size(), 12u);
}

TEST(DatasetTest, WindowInventory) {
  const DatasetConfig cfg = small_config();
  const Dataset data = generate_dataset(cfg);
  ASSERT_EQ(data.trials().size(), 3u);
  std::size_t tc = 0;
  for (const auto& t : data.trials()) {
    for (double d : cfg.window_durations_s) tc += cfg.window(d, cfg.tc_stride).window_count(t.timestamps.size());
  }
  EXPECT_EQ(data.tc_windows().size(), tc);
  for (const auto& w : data.gpr_windows()) {
    ASSERT_TRUE(w.label.has_value());
    ASSERT_GE(w.cycle, 0);
    const auto& lt = data.trials()[w.trial];
    ASSERT_TRUE(lt.percent[w.start].has_value());
    ASSERT_DOUBLE_EQ(w.label->percent, *lt.percent[w.start + w.length - 1]);
  }
  EXPECT_GT(data.gpr_windows().size(), 100u);
}

TEST(DatasetTest, GlobalCycleIdsAreContiguousAndPerTerrain) {
  const Dataset data = generate_dataset(small_config());
  std::vector<std::set<int>> per_terrain(3);
  for (const auto& w : data.tc_windows()) {
    if (w.cycle >= 0) per_terrain[static_cast<std::size_t>(w.terrain)].insert(w.cycle);
  }
  std::set<int> all;
  for (const auto& s : per_terrain) {
    EXPECT_GE(s.size(), 5u);
    for (int c : s) EXPECT_TRUE(all.insert(c).second) << "cycle " << c << " in two terrains";
  }
  EXPECT_EQ(*all.rbegin() + 1, data.num_cycles());
}

TEST(DatasetTest, InputsAreNormalisedAndManifestStable) {
  const Dataset a = generate_dataset(small_config());
  const Dataset b = generate_dataset(small_config());
  EXPECT_EQ(a.manifest().dump(), b.manifest().dump());
  const InputTensor in = a.input(a.tc_windows()[7]);
  for (double v : in.values()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  EXPECT_EQ(in, b.input(b.tc_windows()[7]));
  auto other = small_config();
  other.seed = 77;
  EXPECT_NE(generate_dataset(other).manifest().dump(), a.manifest().dump());
}

}  // namespace
}  // namespace gaitmtl
