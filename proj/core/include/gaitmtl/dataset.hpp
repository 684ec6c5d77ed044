#pragma once

// Labeled window sets built from trials. Windows are kept as references into
// the trial streams and turned into InputTensors on demand, so the dense
// terrain set stays small in memory.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "gaitmtl/labeler.hpp"
#include "gaitmtl/pipeline.hpp"
#include "gaitmtl/synth.hpp"

namespace gaitmtl {

struct DatasetConfig {
  std::vector<Terrain> terrains{kAllTerrains.begin(), kAllTerrains.end()};
  std::vector<double> cadences_bpm{kDefaultCadencesBpm.begin(), kDefaultCadencesBpm.end()};
  double trial_duration_s = 40.0;
  std::vector<double> window_durations_s{kAugmentationDurations.begin(),
                                         kAugmentationDurations.end()};
  /// Window stride (samples) for the phase set and the terrain set.
  std::size_t gpr_stride = 11;
  std::size_t tc_stride = 1;
  std::size_t smooth_len = 5;
  double contact_threshold = kDefaultContactThreshold;
  GaitModelParams generator = GaitModelParams::defaults();
  std::uint64_t seed = 2024;

  void validate() const;
  /// Window settings for one augmentation duration.
  WindowConfig window(double duration_s, std::size_t stride) const;
  nlohmann::json to_json() const;
};

/// One trial's streams plus the labels derived from its foot switches.
struct LabeledTrial {
  SensorTrial trial;
  Channels channels;
  std::vector<double> timestamps;
  std::vector<GaitEvent> events;                 ///< detected from the FSR stream
  std::vector<std::optional<double>> percent;   ///< per sample
  std::vector<int> local_cycle;                  ///< per sample, -1 if unlabeled
  int cycle_base = 0;                            ///< global id of local cycle 0
  int num_cycles = 0;
};

struct WindowRef {
  std::uint32_t trial = 0;
  std::uint32_t start = 0;
  std::uint32_t length = 0;
  Terrain terrain = Terrain::kLevel;
  int cycle = -1;          ///< global cycle id of the last sample, -1 if unlabeled
  double end_t = 0.0;
  std::optional<GaitLabel> label;  ///< present when every sample is labeled
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(DatasetConfig config, std::vector<LabeledTrial> trials);

  const DatasetConfig& config() const { return config_; }
  const std::vector<LabeledTrial>& trials() const { return trials_; }
  /// Windows fully inside a labeled span, at the phase stride.
  const std::vector<WindowRef>& gpr_windows() const { return gpr_; }
  /// Every window at the terrain stride.
  const std::vector<WindowRef>& tc_windows() const { return tc_; }
  int num_cycles() const { return num_cycles_; }

  InputTensor input(const WindowRef& w) const;
  /// Manifest: trials, seeds, event counts and global cycle ranges.
  nlohmann::json manifest() const;

 private:
  DatasetConfig config_;
  std::vector<LabeledTrial> trials_;
  std::vector<WindowRef> gpr_;
  std::vector<WindowRef> tc_;
  int num_cycles_ = 0;
};

/// Seed of trial `index` in the grid (terrain-major, then cadence).
std::uint64_t trial_seed(std::uint64_t dataset_seed, std::size_t index);

std::vector<TrialCondition> grid_conditions(const DatasetConfig& config);

/// Runs the labeler on a trial's FSR stream.
LabeledTrial label_trial(SensorTrial trial, double contact_threshold);

Dataset generate_dataset(const DatasetConfig& config);
/// Builds windows from already-available trials (e.g. read from CSV).
Dataset build_dataset(const DatasetConfig& config, std::vector<SensorTrial> trials);

}  // namespace gaitmtl
