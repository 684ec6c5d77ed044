#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gaitmtl/dataset.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/pipeline.hpp"
#include "run_config.hpp"

namespace gaitmtl::cli {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

int exit_code_for(Errc code) noexcept;

/// Trials from a `synth` output directory, or freshly generated from the
/// config when `data_dir` is empty.
Dataset load_or_generate(const RunConfig& cfg, const std::optional<fs::path>& data_dir);

/// Writes trial CSVs plus `manifest.json` under `out_dir`.
void cmd_synth(const RunConfig& cfg, const fs::path& out_dir);

struct GprOutcome {
  double rmse_pct = 0.0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
};
/// `gpr.gmtw`, `gpr_loss.csv`, `gpr_metrics.json`.
GprOutcome cmd_train_gpr(const RunConfig& cfg, const fs::path& out_dir,
                         const std::optional<fs::path>& data_dir, std::ostream* log);

/// `multitask.gmtw`, `tc_loss.csv`, `tc_metrics.json`.
TcMetrics cmd_train_tc(const RunConfig& cfg, const fs::path& gpr_weights, const fs::path& out_dir,
                       const std::optional<fs::path>& data_dir, std::ostream* log);

/// `comparison.json`, `comparison.txt`, `curves/*.csv` and, when asked,
/// `weights/seed<N>/{gpr,multitask}.gmtw`.
ComparisonReport cmd_compare(const RunConfig& cfg, const fs::path& out_dir,
                             const std::optional<fs::path>& data_dir, bool save_weights,
                             std::ostream* log);

/// Per-window CSV `t,percent,x,y,terrain,p_LW,p_SA,p_SD` for a multitask
/// weight file and an IMU trial CSV. `t` is the last sample of the window.
/// Returns the number of windows written.
std::size_t cmd_infer(const fs::path& weights, const fs::path& imu_csv, const WindowConfig& window,
                      const fs::path& out_csv);

struct GradcheckOutcome {
  bool passed = false;
  double tolerance = 0.0;
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};
/// Gradient check of a reduced network (2 blocks, length 20, batch 4) under
/// both the phase (MSE) and the terrain (cross-entropy) loss.
GradcheckOutcome cmd_gradcheck(std::uint64_t seed, double tolerance, bool inject_sign_flip);

/// FSR CSV to `t,percent,x,y` rows for every labeled sample.
std::size_t cmd_label(const fs::path& fsr_csv, double threshold, const fs::path& out_csv);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gaitmtl::cli
