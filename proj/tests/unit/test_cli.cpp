#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "gaitmtl/csv_io.hpp"

namespace fs = std::filesystem;

namespace gaitmtl::cli {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "gaitmtl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("gaitmtl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) { return csv::read_text_file(p); }

std::vector<std::vector<std::string>> rows_of(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// One cadence, short trials, one epoch each: seconds rather than minutes.
fs::path tiny_config(const fs::path& dir) {
  const nlohmann::json j = {
      {"dataset", {{"cadences_bpm", {90.0}}, {"trial_duration_s", 20.0}, {"gpr_stride", 9}, {"tc_stride", 6}}},
      {"gpr_train", {{"epochs", 1}, {"batch_size", 64}}},
      {"tc_train", {{"epochs", 1}, {"batch_size", 64}}},
      {"seeds", {3}}};
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

TEST(CliTest, HelpListsDefaults) {
  const auto top = invoke({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"synth", "train-gpr", "train-tc", "compare", "infer", "gradcheck", "label"})
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  const auto gpr = invoke({"train-gpr", "--help"});
  EXPECT_EQ(gpr.code, 0);
  EXPECT_NE(gpr.out.find("0.0001"), std::string::npos) << gpr.out;
  EXPECT_NE(gpr.out.find("128"), std::string::npos);
  const auto cmp = invoke({"compare", "--help"});
  EXPECT_NE(cmp.out.find("[1,2,3,4,5]"), std::string::npos) << cmp.out;
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"train-tc"}).code, kExitUsage);  // --gpr-weights is required
  EXPECT_EQ(invoke({"gradcheck", "--tolerance", "abc"}).code, kExitUsage);
  const auto dir = scratch("badcfg");
  std::ofstream(dir / "bad.json") << R"({"gpr_train": {"epochs": 2, "momentum": 0.9}})";
  const auto r = invoke({"--config", (dir / "bad.json").string(), "gradcheck"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("momentum"), std::string::npos) << r.err;
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(invoke({"--config", (dir / "broken.json").string(), "gradcheck"}).code, kExitUsage);
}

TEST(CliTest, GradcheckPassesAndDetectsSignFlip) {
  const auto ok = invoke({"gradcheck"});
  EXPECT_EQ(ok.code, kExitOk) << ok.out << ok.err;
  EXPECT_EQ(ok.out.rfind("PASS", 0), 0u);
  const auto bad = invoke({"gradcheck", "--inject-sign-flip"});
  EXPECT_EQ(bad.code, kExitNumerical);
  EXPECT_EQ(bad.out.rfind("FAIL", 0), 0u);
}

TEST(CliTest, SynthWritesGridDeterministically) {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  ASSERT_EQ(invoke({"--seed", "9", "--out", a.string(), "synth", "--duration", "6"}).code, kExitOk);
  ASSERT_EQ(invoke({"--seed", "9", "--out", b.string(), "synth", "--duration", "6"}).code, kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  ASSERT_EQ(manifest["trials"].size(), 12u);
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(a / "trials")) {
    ++csvs;
    EXPECT_EQ(slurp(e.path()), slurp(b / "trials" / e.path().filename()));
  }
  EXPECT_EQ(csvs, 36u);
  const auto& first = manifest["trials"][0];
  const auto imu = slurp(a / first["imu"].get<std::string>());
  EXPECT_EQ(line_count(imu), 1u + 300u);  // header plus 6 s at 50 Hz
  EXPECT_TRUE(fs::exists(a / "config.json"));
  const auto cfg = nlohmann::json::parse(slurp(a / "config.json"));
  EXPECT_EQ(cfg["dataset"]["seed"], 9);
  EXPECT_EQ(cfg["dataset"]["trial_duration_s"], 6.0);
}

TEST(CliTest, SynthSubsetAndBadTerrain) {
  const auto dir = scratch("synth_subset");
  const auto r = invoke({"--out", dir.string(), "synth", "--duration", "5", "--terrains", "SA",
                         "--cadences", "70", "130"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest.json"))["trials"].size(), 2u);
  EXPECT_NE(invoke({"--out", dir.string(), "synth", "--terrains", "XX"}).code, kExitOk);
}

TEST(CliTest, LabelWritesPercentRows) {
  const auto dir = scratch("label");
  ASSERT_EQ(invoke({"--out", dir.string(), "synth", "--duration", "8", "--terrains", "LW",
                    "--cadences", "90"}).code, kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  const fs::path fsr = dir / manifest["trials"][0]["fsr"].get<std::string>();
  const auto r = invoke({"--out", (dir / "lab").string(), "label", "--fsr", fsr.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = rows_of(slurp(dir / "lab" / "labels.csv"));
  ASSERT_GT(rows.size(), 100u);
  EXPECT_TRUE(fs::exists(dir / "lab" / "config.json"));
}

TEST(CliTest, TrainInferPipelineIsReproducible) {
  const auto dir = scratch("pipeline");
  const auto cfg = tiny_config(dir);
  for (const char* run_dir : {"r1", "r2"}) {
    const auto base = dir / run_dir;
    const auto g = invoke({"--config", cfg.string(), "--out", (base / "gpr").string(), "train-gpr"});
    ASSERT_EQ(g.code, kExitOk) << g.err;
    const auto t = invoke({"--config", cfg.string(), "--out", (base / "tc").string(), "train-tc",
                           "--gpr-weights", (base / "gpr" / "gpr.gmtw").string()});
    ASSERT_EQ(t.code, kExitOk) << t.err;
  }
  for (const char* f : {"gpr/gpr.gmtw", "gpr/gpr_loss.csv", "gpr/gpr_metrics.json", "tc/multitask.gmtw",
                        "tc/tc_loss.csv", "tc/tc_metrics.json", "gpr/config.json"}) {
    EXPECT_EQ(slurp(dir / "r1" / f), slurp(dir / "r2" / f)) << f;
  }
  EXPECT_EQ(slurp(dir / "r1/gpr/gpr_loss.csv").rfind("epoch,train_loss,test_loss\n", 0), 0u);
  const auto echoed = nlohmann::json::parse(slurp(dir / "r1/tc/config.json"));
  EXPECT_EQ(echoed["tc_train"]["epochs"], 1);

  // Multitask weights on a phase-only command are rejected as data errors.
  const auto wrong = invoke({"--config", cfg.string(), "--out", (dir / "x").string(), "train-tc",
                             "--gpr-weights", (dir / "r1/tc/multitask.gmtw").string()});
  EXPECT_EQ(wrong.code, kExitData);

  ASSERT_EQ(invoke({"--out", (dir / "trial").string(), "synth", "--duration", "10", "--terrains", "SD",
                    "--cadences", "110"}).code, kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(dir / "trial/manifest.json"));
  const fs::path imu = dir / "trial" / manifest["trials"][0]["imu"].get<std::string>();
  const auto inf = invoke({"--out", (dir / "inf").string(), "infer", "--weights",
                           (dir / "r1/tc/multitask.gmtw").string(), "--imu", imu.string(),
                           "--stride", "10"});
  ASSERT_EQ(inf.code, kExitOk) << inf.err;
  const auto rows = rows_of(slurp(dir / "inf/inference.csv"));
  // 500 samples, 75-sample windows, stride 10.
  ASSERT_EQ(rows.size(), 1u + (500u - 75u) / 10u + 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "percent", "x", "y", "terrain", "p_LW", "p_SA", "p_SD"}));
  const std::set<std::string> terrains{"LW", "SA", "SD"};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_TRUE(terrains.count(rows[i][4])) << rows[i][4];
    const double p = std::stod(rows[i][5]) + std::stod(rows[i][6]) + std::stod(rows[i][7]);
    EXPECT_NEAR(p, 1.0, 1e-9);
    if (!rows[i][1].empty()) {
      const double x = std::stod(rows[i][2]), y = std::stod(rows[i][3]);
      double want = std::atan2(y, x) / (2.0 * std::numbers::pi) * 100.0;
      if (want < 0) want += 100.0;
      EXPECT_NEAR(std::stod(rows[i][1]), want, 1e-6);
    }
  }
  const auto again = invoke({"--out", (dir / "inf2").string(), "infer", "--weights",
                             (dir / "r1/tc/multitask.gmtw").string(), "--imu", imu.string(),
                             "--stride", "10"});
  ASSERT_EQ(again.code, kExitOk);
  EXPECT_EQ(slurp(dir / "inf/inference.csv"), slurp(dir / "inf2/inference.csv"));
}

TEST(CliTest, CompareFromSynthDirectory) {
  const auto dir = scratch("compare");
  const auto cfg = tiny_config(dir);
  ASSERT_EQ(invoke({"--config", cfg.string(), "--out", (dir / "data").string(), "synth"}).code, kExitOk);
  const auto r = invoke({"--config", cfg.string(), "--out", (dir / "cmp").string(), "compare",
                         "--seeds", "1,2", "--data", (dir / "data").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = nlohmann::json::parse(slurp(dir / "cmp/comparison.json"));
  EXPECT_EQ(report["tc"].size(), 6u);
  EXPECT_EQ(report["gpr"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "cmp/comparison.txt"));
  EXPECT_TRUE(fs::exists(dir / "cmp/curves/gpr_seed2.csv"));
  EXPECT_TRUE(fs::exists(dir / "cmp/curves/model3_mlp_seed1.csv"));
  EXPECT_TRUE(fs::exists(dir / "cmp/weights/seed1/multitask.gmtw"));
  EXPECT_TRUE(fs::exists(dir / "cmp/config.json"));
  EXPECT_NE(r.out.find("model1_multitask"), std::string::npos);

  // The same data generated in memory gives the same report.
  const auto mem = invoke({"--config", cfg.string(), "--out", (dir / "cmp_mem").string(), "compare",
                           "--seeds", "1,2", "--no-weights"});
  ASSERT_EQ(mem.code, kExitOk) << mem.err;
  EXPECT_FALSE(fs::exists(dir / "cmp_mem/weights"));
  const auto mem_report = nlohmann::json::parse(slurp(dir / "cmp_mem/comparison.json"));
  EXPECT_EQ(mem_report["tc"], report["tc"]);
}

TEST(CliTest, DataErrorsExitTwo) {
  const auto dir = scratch("dataerr");
  EXPECT_EQ(invoke({"--out", dir.string(), "train-gpr", "--data", (dir / "missing").string()}).code,
            kExitUsage);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(invoke({"--out", dir.string(), "train-gpr", "--data", (dir / "empty").string()}).code,
            kExitData);
  // Two seconds per trial cannot supply five cycles per terrain.
  const nlohmann::json j = {{"dataset", {{"cadences_bpm", {70.0}}, {"trial_duration_s", 4.0}}},
                            {"gpr_train", {{"epochs", 1}}}};
  std::ofstream(dir / "short.json") << j.dump();
  const auto r = invoke({"--config", (dir / "short.json").string(), "--out", dir.string(), "compare",
                         "--seeds", "1"});
  EXPECT_EQ(r.code, kExitData) << r.err;
}

}  // namespace
}  // namespace gaitmtl::cli
