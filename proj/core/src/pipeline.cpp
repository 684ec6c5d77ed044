#include "gaitmtl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitmtl/errors.hpp"

namespace gaitmtl {

std::size_t channel_length(const Channels& channels) {
  const std::size_t n = channels[0].size();
  for (const auto& row : channels) {
    if (row.size() != n) fail(Errc::kShapeError, "channel rows differ in length");
  }
  return n;
}

void WindowConfig::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    fail(Errc::kInvalidConfig, "window duration must be > 0");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    fail(Errc::kInvalidConfig, "sample rate must be > 0");
  }
  if (stride < 1) fail(Errc::kInvalidConfig, "stride must be >= 1");
  if (target_len < 2) fail(Errc::kInvalidConfig, "target length must be >= 2");
  if (smooth_len % 2 == 0 || smooth_len < 1 || smooth_len > target_len) {
    fail(Errc::kInvalidConfig, "smoothing length must be odd and within [1, target_len]");
  }
  if (window_length() < 2) fail(Errc::kInvalidConfig, "window shorter than 2 samples");
}

std::size_t WindowConfig::window_length() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

std::size_t WindowConfig::window_count(std::size_t n) const {
  const std::size_t len = window_length();
  if (n < len) return 0;
  return (n - len) / stride + 1;
}

InputTensor::InputTensor(std::size_t records)
    : records_(records), data_(kNumChannels * records, 0.0) {}

Channels select_features(std::span<const ImuSample> samples) {
  if (samples.empty()) fail(Errc::kEmptyStream, "no IMU samples");
  Channels out;
  for (auto& row : out) row.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      out[a][i] = samples[i].lin_acc[a];
      out[3 + a][i] = samples[i].ang_vel[a];
    }
  }
  return out;
}

std::vector<Channels> stack_windows(const Channels& channels, const WindowConfig& cfg) {
  cfg.validate();
  const std::size_t n = channel_length(channels);
  const std::size_t len = cfg.window_length();
  if (n < len) {
    fail(Errc::kInsufficientData,
         "stream has " + std::to_string(n) + " samples, window needs " + std::to_string(len));
  }
  const std::size_t count = cfg.window_count(n);
  std::vector<Channels> windows(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * cfg.stride;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      const auto first = channels[c].begin() + static_cast<std::ptrdiff_t>(start);
      windows[w][c].assign(first, first + static_cast<std::ptrdiff_t>(len));
    }
  }
  return windows;
}

std::vector<double> resample(std::span<const double> channel, std::size_t target_len) {
  const std::size_t len = channel.size();
  if (len < 2) fail(Errc::kInsufficientData, "resampling needs at least 2 samples");
  if (target_len < 2) fail(Errc::kInvalidConfig, "resampling target must be >= 2");
  std::vector<double> out(target_len);
  const double span = static_cast<double>(len - 1);
  const double denom = static_cast<double>(target_len - 1);
  for (std::size_t i = 0; i < target_len; ++i) {
    // pos = i * (len-1) / (target_len-1), computed so the last point is exact.
    const double pos = static_cast<double>(i) * span / denom;
    auto lo = static_cast<std::size_t>(pos);
    if (lo >= len - 1) lo = len - 2;
    const double frac = pos - static_cast<double>(lo);
    out[i] = channel[lo] + frac * (channel[lo + 1] - channel[lo]);
  }
  out.front() = channel.front();
  out.back() = channel.back();
  return out;
}

std::vector<double> moving_average(std::span<const double> channel, std::size_t width) {
  const std::size_t n = channel.size();
  if (width % 2 == 0 || width < 1 || width > n) {
    fail(Errc::kInvalidConfig, "moving-average width must be odd and in [1, length]");
  }
  const std::size_t half = width / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t reach = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (std::size_t j = i - reach; j <= i + reach; ++j) sum += channel[j];
    out[i] = sum / static_cast<double>(2 * reach + 1);
  }
  return out;
}

std::vector<double> minmax_scale(std::span<const double> channel) {
  if (channel.empty()) fail(Errc::kEmptyStream, "cannot scale an empty channel");
  for (double v : channel) {
    if (!std::isfinite(v)) fail(Errc::kInvalidData, "non-finite value in channel");
  }
  const auto [lo_it, hi_it] = std::minmax_element(channel.begin(), channel.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(channel.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double range = hi - lo;
  for (std::size_t i = 0; i < channel.size(); ++i) {
    out[i] = std::clamp((channel[i] - lo) / range, 0.0, 1.0);
  }
  return out;
}

InputTensor make_input(const Channels& raw_window, const WindowConfig& cfg) {
  channel_length(raw_window);
  InputTensor tensor(cfg.target_len);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const auto scaled =
        minmax_scale(moving_average(resample(raw_window[c], cfg.target_len), cfg.smooth_len));
    std::copy(scaled.begin(), scaled.end(), tensor.values().begin() + c * cfg.target_len);
  }
  return tensor;
}

}  // namespace gaitmtl
