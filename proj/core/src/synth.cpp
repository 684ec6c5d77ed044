#include "gaitmtl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gaitmtl/errors.hpp"
#include "gaitmtl/random.hpp"

namespace gaitmtl {

namespace {

constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kImpactDecayS = 0.04;

struct Derivatives {
  double value = 0.0;
  double d1 = 0.0;  // d/dphase
  double d2 = 0.0;  // d2/dphase2
};

Derivatives evaluate(const Harmonics& h, double phase) {
  Derivatives d;
  for (std::size_t k = 0; k < h.amp.size(); ++k) {
    const double w = kTwoPi * static_cast<double>(k + 1);
    const double arg = w * phase + h.phase_rad[k];
    d.value += h.amp[k] * std::sin(arg);
    d.d1 += h.amp[k] * w * std::cos(arg);
    d.d2 -= h.amp[k] * w * w * std::sin(arg);
  }
  return d;
}

Harmonics jittered(const Harmonics& h, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Harmonics out = h;
  for (std::size_t k = 0; k < h.amp.size(); ++k) {
    out.amp[k] *= 1.0 + spread * n(rng);
    out.phase_rad[k] += spread * n(rng);
  }
  return out;
}

Harmonics blend(const Harmonics& a, const Harmonics& b, double w) {
  Harmonics out;
  for (std::size_t k = 0; k < a.amp.size(); ++k) {
    out.amp[k] = (1.0 - w) * a.amp[k] + w * b.amp[k];
    out.phase_rad[k] = (1.0 - w) * a.phase_rad[k] + w * b.phase_rad[k];
  }
  return out;
}

struct Cycle {
  double start;
  double period;
  std::array<Harmonics, 3> shape;  // pitch, roll, yaw
};

}  // namespace

std::string_view terrain_code(Terrain t) noexcept {
  switch (t) {
    case Terrain::kLevel: return "LW";
    case Terrain::kStairAscent: return "SA";
    case Terrain::kStairDescent: return "SD";
  }
  return "??";
}

Terrain parse_terrain(std::string_view code) {
  for (auto t : kAllTerrains) {
    if (terrain_code(t) == code) return t;
  }
  fail(Errc::kInvalidConfig, "unknown terrain '" + std::string(code) + "'");
}

GaitModelParams GaitModelParams::defaults() {
  GaitModelParams p;
  auto& lw = p.terrains[static_cast<int>(Terrain::kLevel)];
  lw.pitch_offset_rad = 0.15;
  lw.pitch = {{0.40, 0.08, 0.02}, {0.0, 0.6, 1.2}};
  lw.roll = {{0.05, 0.02, 0.0}, {0.4, 1.0, 0.0}};
  lw.yaw = {{0.06, 0.015, 0.0}, {1.2, 0.3, 0.0}};
  lw.stance_fraction = 0.60;
  lw.heel_strike_fraction = 0.15;
  lw.heel_off_fraction = 0.25;
  lw.stance_accel_bias = 0.5;
  lw.impact_accel = 3.0;

  auto& sa = p.terrains[static_cast<int>(Terrain::kStairAscent)];
  sa.pitch_offset_rad = 0.55;
  sa.pitch = {{0.50, 0.16, 0.05}, {0.3, 1.5, 2.2}};
  sa.roll = {{0.07, 0.03, 0.01}, {0.9, 2.0, 0.5}};
  sa.yaw = {{0.04, 0.02, 0.01}, {0.2, 1.1, 2.5}};
  sa.stance_fraction = 0.65;
  sa.heel_strike_fraction = 0.10;
  sa.heel_off_fraction = 0.30;
  sa.stance_accel_bias = 2.0;
  sa.impact_accel = 1.5;

  auto& sd = p.terrains[static_cast<int>(Terrain::kStairDescent)];
  sd.pitch_offset_rad = 0.10;
  sd.pitch = {{0.30, 0.12, 0.06}, {-0.3, 2.4, 0.5}};
  sd.roll = {{0.06, 0.03, 0.02}, {-0.5, 0.7, 1.9}};
  sd.yaw = {{0.05, 0.025, 0.01}, {2.0, -0.4, 0.9}};
  sd.stance_fraction = 0.55;
  sd.heel_strike_fraction = 0.25;
  sd.heel_off_fraction = 0.15;
  sd.stance_accel_bias = -1.0;
  sd.impact_accel = 5.0;
  return p;
}

void GaitModelParams::validate() const {
  for (const auto& t : terrains) {
    if (!(t.stance_fraction > 0.0 && t.stance_fraction < 1.0)) {
      fail(Errc::kInvalidConfig, "stance fraction must be in (0, 1)");
    }
    if (!(t.heel_strike_fraction >= 0.0 && t.heel_off_fraction >= 0.0 &&
          t.heel_strike_fraction + t.heel_off_fraction < 1.0)) {
      fail(Errc::kInvalidConfig, "stance sub-phase fractions must leave room for mid-stance");
    }
  }
  if (accel_noise_std < 0.0 || gyro_noise_std < 0.0 || fsr_noise_std < 0.0) {
    fail(Errc::kInvalidConfig, "noise std must be >= 0");
  }
  if (!(gain_min > 0.0 && gain_max >= gain_min)) fail(Errc::kInvalidConfig, "bad gain range");
  if (coefficient_jitter < 0.0 || stride_jitter < 0.0 || cycle_jitter < 0.0 || cycle_jitter >= 0.5) {
    fail(Errc::kInvalidConfig, "jitter out of range");
  }
  if (!(start_phase >= 0.0 && start_phase < 1.0)) fail(Errc::kInvalidConfig, "start phase in [0,1)");
}

nlohmann::json GaitModelParams::to_json() const {
  return {{"accel_noise_std", accel_noise_std},
          {"gyro_noise_std", gyro_noise_std},
          {"fsr_noise_std", fsr_noise_std},
          {"gain_min", gain_min},
          {"gain_max", gain_max},
          {"coefficient_jitter", coefficient_jitter},
          {"cycle_jitter", cycle_jitter},
          {"stride_jitter", stride_jitter},
          {"start_phase", start_phase},
          {"segment_length_m", segment_length_m}};
}

SensorTrial generate_trial(const TrialCondition& condition, const GaitModelParams& params) {
  params.validate();
  if (!(condition.cadence_bpm > 0.0)) fail(Errc::kInvalidConfig, "cadence must be > 0");
  const double nominal_period = 1.0 / condition.stride_hz();
  if (!(condition.duration_s > nominal_period)) {
    fail(Errc::kInvalidConfig, "trial shorter than one stride");
  }

  std::mt19937_64 rng(mix_seed(condition.seed, seed_stream::kTrial));
  std::normal_distribution<double> normal(0.0, 1.0);
  const TerrainProfile& base = params.terrains.at(static_cast<std::size_t>(condition.terrain));

  // Per-trial variation: coefficients, then mount gains.
  TerrainProfile prof = base;
  prof.pitch = jittered(base.pitch, params.coefficient_jitter, rng);
  prof.roll = jittered(base.roll, params.coefficient_jitter, rng);
  prof.yaw = jittered(base.yaw, params.coefficient_jitter, rng);

  SensorTrial trial;
  trial.condition = condition;
  std::uniform_real_distribution<double> gain(params.gain_min, params.gain_max);
  for (auto& g : trial.mount_gain) g = gain(rng);

  // Cycle schedule; the first cycle began before t = 0.
  std::vector<Cycle> cycles;
  {
    auto period = [&] {
      return nominal_period * (1.0 + params.cycle_jitter * std::clamp(normal(rng), -2.0, 2.0));
    };
    auto shape = [&] {
      return std::array<Harmonics, 3>{jittered(prof.pitch, params.stride_jitter, rng),
                                      jittered(prof.roll, params.stride_jitter, rng),
                                      jittered(prof.yaw, params.stride_jitter, rng)};
    };
    double p = period();
    double start = -params.start_phase * p;
    while (start < condition.duration_s) {
      cycles.push_back({start, p, shape()});
      start += p;
      p = period();
    }
    // One extra draw so the last cycle has a successor to blend towards.
    cycles.push_back({start, p, shape()});
  }

  const auto n = static_cast<std::size_t>(std::llround(condition.duration_s * kSampleRateHz));
  // Truth covers the recorded span only: an event after the last sample is
  // not observable in the stream.
  const double last_t = static_cast<double>(n - 1) / kSampleRateHz;
  const double swing = 1.0 - prof.stance_fraction;
  for (const auto& c : cycles) {
    if (c.start >= 0.0 && c.start < last_t) trial.truth_events.push_back({GaitEventKind::kFootLift, c.start});
    const double strike = c.start + swing * c.period;
    if (strike >= 0.0 && strike < last_t) {
      trial.truth_events.push_back({GaitEventKind::kFootStrike, strike});
    }
  }

  trial.imu.resize(n);
  trial.fsr.resize(n);
  const double len = params.segment_length_m;
  std::vector<std::array<double, kNumChannels>> clean(n);
  std::vector<std::array<bool, 2>> contact(n);  // front, back
  std::size_t ci = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / kSampleRateHz;
    while (ci + 2 < cycles.size() && t >= cycles[ci + 1].start) ++ci;
    const Cycle& c = cycles[ci];
    const Cycle& next = cycles[ci + 1];
    const double phase = std::clamp((t - c.start) / c.period, 0.0, std::nextafter(1.0, 0.0));
    const double inv_p = 1.0 / c.period;

    // Stride-to-stride variation: the shape drifts from this cycle's draw to
    // the next one's, so signals stay continuous across cycle boundaries.
    const auto pitch = evaluate(blend(c.shape[0], next.shape[0], phase), phase);
    const auto roll = evaluate(blend(c.shape[1], next.shape[1], phase), phase);
    const auto yaw = evaluate(blend(c.shape[2], next.shape[2], phase), phase);
    const double theta = prof.pitch_offset_rad + pitch.value;
    const double omega = pitch.d1 * inv_p;
    const double alpha = pitch.d2 * inv_p * inv_p;

    double stance_weight = 0.0;
    double impact = 0.0;
    if (phase >= swing) {
      const double u = (phase - swing) / prof.stance_fraction;
      stance_weight = std::sin(std::numbers::pi * u) * std::sin(std::numbers::pi * u);
      const double since_strike = (phase - swing) * c.period;
      impact = prof.impact_accel * std::exp(-since_strike / kImpactDecayS);
      contact[k] = {u >= prof.heel_strike_fraction, u < 1.0 - prof.heel_off_fraction};
    }

    auto& v = clean[k];
    v[0] = kGravity * std::sin(theta) + len * alpha + 0.5 * impact;
    v[1] = kGravity * std::cos(theta) - len * omega * omega +
           prof.stance_accel_bias * stance_weight + impact;
    v[2] = kGravity * std::sin(roll.value) + len * roll.d2 * inv_p * inv_p;
    v[3] = roll.d1 * inv_p;
    v[4] = yaw.d1 * inv_p;
    v[5] = omega;
  }

  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = clean[k];
    ImuSample& s = trial.imu[k];
    s.t = static_cast<double>(k) / kSampleRateHz;
    for (std::size_t a = 0; a < 3; ++a) {
      s.lin_acc[a] = trial.mount_gain[a] * v[a] + params.accel_noise_std * normal(rng);
      s.ang_vel[a] = trial.mount_gain[3 + a] * v[3 + a] + params.gyro_noise_std * normal(rng);
    }
    auto level = [&](bool on) {
      const double noise = params.fsr_noise_std * normal(rng);
      return on ? std::max(0.0, 1.0 + noise) : std::fabs(noise);
    };
    trial.fsr[k] = {s.t, level(contact[k][0]), level(contact[k][1])};
  }
  return trial;
}

}  // namespace gaitmtl
