#pragma once

// Synthetic thigh-IMU + foot-switch trials over the terrain x cadence grid.
// This stands in for recorded walking data: the signals are a small harmonic
// family per terrain, not a biomechanical simulation.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaitmtl/labeler.hpp"
#include "gaitmtl/pipeline.hpp"

namespace gaitmtl {

enum class Terrain { kLevel = 0, kStairAscent = 1, kStairDescent = 2 };

inline constexpr std::array<Terrain, 3> kAllTerrains{Terrain::kLevel, Terrain::kStairAscent,
                                                     Terrain::kStairDescent};
inline constexpr std::array<double, 4> kDefaultCadencesBpm{70.0, 90.0, 110.0, 130.0};

std::string_view terrain_code(Terrain t) noexcept;  ///< "LW", "SA", "SD"
Terrain parse_terrain(std::string_view code);

struct TrialCondition {
  Terrain terrain = Terrain::kLevel;
  double cadence_bpm = 90.0;  ///< steps per minute; one stride is two steps
  double duration_s = 60.0;
  std::uint64_t seed = 0;

  double stride_hz() const { return cadence_bpm / 120.0; }
};

/// Harmonic series sum_h amp[h] * sin(2 pi (h+1) phase + phase_rad[h]).
struct Harmonics {
  std::array<double, 3> amp{};
  std::array<double, 3> phase_rad{};
};

struct TerrainProfile {
  double pitch_offset_rad = 0.0;  ///< mean thigh flexion
  Harmonics pitch;                ///< sagittal thigh angle (rad)
  Harmonics roll;                 ///< frontal-plane wobble (rad)
  Harmonics yaw;                  ///< transverse rotation (rad)
  double stance_fraction = 0.6;
  double heel_strike_fraction = 0.15;  ///< of stance, back sensor only
  double heel_off_fraction = 0.25;     ///< of stance, front sensor only
  double stance_accel_bias = 0.0;      ///< m/s^2 along the thigh during stance
  double impact_accel = 0.0;           ///< peak of the decaying strike transient
};

struct GaitModelParams {
  std::array<TerrainProfile, 3> terrains;
  double accel_noise_std = 0.15;   ///< m/s^2
  double gyro_noise_std = 0.05;    ///< rad/s
  double fsr_noise_std = 0.02;
  double gain_min = 0.8;           ///< per-trial, per-channel mount gain range
  double gain_max = 1.25;
  double coefficient_jitter = 0.06;  ///< relative per-trial amplitude spread
  double cycle_jitter = 0.0;         ///< relative per-cycle period spread
  double stride_jitter = 0.0;        ///< per-cycle amplitude/phase spread
  double start_phase = 0.75;         ///< cycle fraction at t = 0 (mid-stance)
  double segment_length_m = 0.25;    ///< hip-to-sensor distance

  static GaitModelParams defaults();
  void validate() const;
  /// Scalar knobs only; the per-terrain profiles are fixed by `defaults()`.
  nlohmann::json to_json() const;
};

struct SensorTrial {
  TrialCondition condition;
  std::vector<ImuSample> imu;
  std::vector<FsrSample> fsr;
  /// Continuous-time foot lift / foot strike instants used to draw the signals.
  std::vector<GaitEvent> truth_events;
  std::array<double, kNumChannels> mount_gain{};
};

/// Deterministic in (condition, params): same inputs, same bytes.
SensorTrial generate_trial(const TrialCondition& condition, const GaitModelParams& params);

}  // namespace gaitmtl
