#pragma once

// Input pipelining: orientation-free IMU features -> fixed-size, normalized
// 6-channel windows consumed by the convolutional backbone.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gaitmtl {

inline constexpr std::size_t kNumChannels = 6;
inline constexpr std::size_t kRecords = 200;
inline constexpr double kSampleRateHz = 50.0;

/// Window durations (seconds) used for augmentation.
inline constexpr std::array<double, 3> kAugmentationDurations{1.5, 1.6, 1.7};

struct ImuSample {
  double t = 0.0;                       ///< seconds, strictly increasing
  std::array<double, 3> lin_acc{};      ///< m/s^2, sensor frame
  std::array<double, 3> ang_vel{};      ///< rad/s, sensor frame
};

/// Six equal-length rows: [lin_acc x,y,z, ang_vel x,y,z].
using Channels = std::array<std::vector<double>, kNumChannels>;

std::size_t channel_length(const Channels& channels);

struct WindowConfig {
  double duration_s = kAugmentationDurations[0];
  double sample_rate_hz = kSampleRateHz;
  std::size_t stride = 1;
  std::size_t target_len = kRecords;
  std::size_t smooth_len = 5;

  /// Throws InvalidConfig when any invariant is broken.
  void validate() const;
  /// Raw window length L = round(duration * rate).
  std::size_t window_length() const;
  /// Number of windows `stack_windows` produces for a stream of `n` samples.
  std::size_t window_count(std::size_t n) const;
};

/// Normalized network input, channel-major (channels x records x 1 sensor).
class InputTensor {
 public:
  InputTensor() = default;
  explicit InputTensor(std::size_t records);

  std::array<std::size_t, 3> shape() const { return {kNumChannels, records_, 1}; }
  std::size_t records() const { return records_; }

  double& at(std::size_t channel, std::size_t record) { return data_[channel * records_ + record]; }
  double at(std::size_t channel, std::size_t record) const { return data_[channel * records_ + record]; }

  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * records_, records_};
  }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  friend bool operator==(const InputTensor&, const InputTensor&) = default;

 private:
  std::size_t records_ = 0;
  std::vector<double> data_;
};

Channels select_features(std::span<const ImuSample> samples);

/// Windows start at 0, stride, 2*stride, ... and are contiguous slices.
std::vector<Channels> stack_windows(const Channels& channels, const WindowConfig& cfg);

/// Piecewise-linear resampling onto `target_len` uniformly spaced points;
/// both endpoints map exactly.
std::vector<double> resample(std::span<const double> channel, std::size_t target_len = kRecords);

/// Centered moving average of odd width; the window shrinks symmetrically at
/// the edges instead of padding.
std::vector<double> moving_average(std::span<const double> channel, std::size_t width);

/// (v - min) / (max - min); a constant channel maps to 0.5.
std::vector<double> minmax_scale(std::span<const double> channel);

/// resample -> moving_average -> minmax_scale, per channel.
InputTensor make_input(const Channels& raw_window, const WindowConfig& cfg);

}  // namespace gaitmtl
