#include "gaitmtl/dataset.hpp"

#include <algorithm>
#include <string>

#include "gaitmtl/errors.hpp"
#include "gaitmtl/random.hpp"

namespace gaitmtl {

void DatasetConfig::validate() const {
  if (terrains.empty() || cadences_bpm.empty()) fail(Errc::kInvalidConfig, "empty condition grid");
  if (window_durations_s.empty()) fail(Errc::kInvalidConfig, "no window durations");
  if (gpr_stride < 1 || tc_stride < 1) fail(Errc::kInvalidConfig, "strides must be >= 1");
  for (double d : window_durations_s) window(d, 1).validate();
  generator.validate();
}

WindowConfig DatasetConfig::window(double duration_s, std::size_t stride) const {
  WindowConfig w;
  w.duration_s = duration_s;
  w.stride = stride;
  w.smooth_len = smooth_len;
  return w;
}

nlohmann::json DatasetConfig::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (auto x : terrains) t.push_back(terrain_code(x));
  return {{"terrains", t},
          {"cadences_bpm", cadences_bpm},
          {"trial_duration_s", trial_duration_s},
          {"window_durations_s", window_durations_s},
          {"gpr_stride", gpr_stride},
          {"tc_stride", tc_stride},
          {"smooth_len", smooth_len},
          {"contact_threshold", contact_threshold},
          {"seed", seed},
          {"generator", generator.to_json()}};
}

std::uint64_t trial_seed(std::uint64_t dataset_seed, std::size_t index) {
  return mix_seed(dataset_seed, 1000 + index);
}

std::vector<TrialCondition> grid_conditions(const DatasetConfig& config) {
  std::vector<TrialCondition> out;
  for (auto terrain : config.terrains) {
    for (double bpm : config.cadences_bpm) {
      out.push_back({terrain, bpm, config.trial_duration_s, trial_seed(config.seed, out.size())});
    }
  }
  return out;
}

LabeledTrial label_trial(SensorTrial trial, double contact_threshold) {
  LabeledTrial lt;
  lt.channels = select_features(trial.imu);
  lt.timestamps.reserve(trial.imu.size());
  for (const auto& s : trial.imu) lt.timestamps.push_back(s.t);
  if (trial.fsr.size() != trial.imu.size()) {
    fail(Errc::kInvalidData, "IMU and FSR streams differ in length");
  }
  for (std::size_t i = 0; i < trial.fsr.size(); ++i) {
    if (trial.fsr[i].t != trial.imu[i].t) {
      fail(Errc::kInvalidData, "IMU and FSR timestamps disagree at sample " + std::to_string(i));
    }
  }
  const auto sections = contact_sections(trial.fsr, contact_threshold);
  lt.events = detect_events(sections);
  lt.percent = assign_percent(lt.timestamps, lt.events);
  lt.local_cycle = assign_cycles(lt.timestamps, lt.events);
  lt.num_cycles = 1 + *std::max_element(lt.local_cycle.begin(), lt.local_cycle.end());
  lt.trial = std::move(trial);
  return lt;
}

Dataset::Dataset(DatasetConfig config, std::vector<LabeledTrial> trials)
    : config_(std::move(config)), trials_(std::move(trials)) {
  config_.validate();
  int base = 0;
  for (auto& t : trials_) {
    t.cycle_base = base;
    base += t.num_cycles;
  }
  num_cycles_ = base;

  for (std::size_t ti = 0; ti < trials_.size(); ++ti) {
    const auto& lt = trials_[ti];
    const std::size_t n = lt.timestamps.size();
    for (double d : config_.window_durations_s) {
      for (int pass = 0; pass < 2; ++pass) {
        const bool phase_set = pass == 0;
        const WindowConfig wc = config_.window(d, phase_set ? config_.gpr_stride : config_.tc_stride);
        const std::size_t len = wc.window_length();
        const std::size_t count = wc.window_count(n);
        for (std::size_t w = 0; w < count; ++w) {
          const std::size_t start = w * wc.stride;
          const std::size_t last = start + len - 1;
          WindowRef ref;
          ref.trial = static_cast<std::uint32_t>(ti);
          ref.start = static_cast<std::uint32_t>(start);
          ref.length = static_cast<std::uint32_t>(len);
          ref.terrain = lt.trial.condition.terrain;
          ref.end_t = lt.timestamps[last];
          const int local = lt.local_cycle[last];
          ref.cycle = local >= 0 ? lt.cycle_base + local : -1;
          if (lt.percent[start] && lt.percent[last]) ref.label = make_label(*lt.percent[last]);
          if (phase_set) {
            if (ref.label) gpr_.push_back(ref);
          } else {
            tc_.push_back(ref);
          }
        }
      }
    }
  }
}

InputTensor Dataset::input(const WindowRef& w) const {
  const auto& lt = trials_.at(w.trial);
  Channels raw;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const auto first = lt.channels[c].begin() + w.start;
    raw[c].assign(first, first + w.length);
  }
  return make_input(raw, config_.window(static_cast<double>(w.length) / kSampleRateHz, 1));
}

nlohmann::json Dataset::manifest() const {
  nlohmann::json trials = nlohmann::json::array();
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    const auto& lt = trials_[i];
    const auto& c = lt.trial.condition;
    nlohmann::json flp = nlohmann::json::array();
    for (const auto& e : lt.events) {
      if (e.kind == GaitEventKind::kFootLift) flp.push_back(e.t);
    }
    trials.push_back({{"index", i},
                      {"terrain", terrain_code(c.terrain)},
                      {"cadence_bpm", c.cadence_bpm},
                      {"duration_s", c.duration_s},
                      {"seed", c.seed},
                      {"samples", lt.timestamps.size()},
                      {"cycles", lt.num_cycles},
                      {"first_cycle_id", lt.cycle_base},
                      {"foot_lift_times", flp}});
  }
  return {{"config", config_.to_json()},
          {"trials", trials},
          {"total_cycles", num_cycles_},
          {"gpr_windows", gpr_.size()},
          {"tc_windows", tc_.size()}};
}

Dataset build_dataset(const DatasetConfig& config, std::vector<SensorTrial> trials) {
  config.validate();
  std::vector<LabeledTrial> labeled;
  labeled.reserve(trials.size());
  for (auto& t : trials) labeled.push_back(label_trial(std::move(t), config.contact_threshold));
  return Dataset(config, std::move(labeled));
}

Dataset generate_dataset(const DatasetConfig& config) {
  config.validate();
  std::vector<SensorTrial> trials;
  for (const auto& c : grid_conditions(config)) trials.push_back(generate_trial(c, config.generator));
  return build_dataset(config, std::move(trials));
}

}  // namespace gaitmtl
