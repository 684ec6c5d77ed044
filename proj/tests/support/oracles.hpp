#pragma once

// Reference implementations written independently of the library code: plain
// loops, long double accumulation and textbook formulas. Tests compare the
// optimized paths against these.

#include <cmath>
#include <cstddef>
#include <vector>

namespace gaitmtl::oracle {

/// Piecewise-linear interpolation on the unit interval: sample k of n sits at
/// k/(n-1); output i of m sits at i/(m-1).
inline std::vector<double> resample(const std::vector<double>& src, std::size_t m) {
  const std::size_t n = src.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const long double u = static_cast<long double>(i) / static_cast<long double>(m - 1);
    std::size_t k = 0;
    while (k + 2 < n && static_cast<long double>(k + 1) / (n - 1) <= u) ++k;
    const long double left = static_cast<long double>(k) / (n - 1);
    const long double right = static_cast<long double>(k + 1) / (n - 1);
    const long double w = (u - left) / (right - left);
    out[i] = static_cast<double>((1.0L - w) * src[k] + w * src[k + 1]);
  }
  return out;
}

/// Centered moving average via prefix sums; the window shrinks symmetrically
/// near the edges.
inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t width) {
  const std::size_t n = x.size();
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = half;
    if (i < r) r = i;
    if (n - 1 - i < r) r = n - 1 - i;
    out[i] = static_cast<double>((prefix[i + r + 1] - prefix[i - r]) / (2 * r + 1));
  }
  return out;
}

/// y[b][o][t] = bias[o] + sum_c sum_j w[o][c][j] * x[b][c][t + j].
inline std::vector<double> conv1d(const std::vector<double>& x, std::size_t batch, std::size_t cin,
                                  std::size_t len, const std::vector<double>& w, std::size_t cout,
                                  std::size_t k, const std::vector<double>& bias) {
  const std::size_t out_len = len - k + 1;
  std::vector<double> y(batch * cout * out_len);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t t = 0; t < out_len; ++t) {
        long double acc = bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t j = 0; j < k; ++j)
            acc += static_cast<long double>(w[(o * cin + c) * k + j]) * x[(b * cin + c) * len + t + j];
        y[(b * cout + o) * out_len + t] = static_cast<double>(acc);
      }
  return y;
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> biased_var;
};

/// Two-pass per-channel mean and variance over (batch, length).
inline ChannelStats channel_stats(const std::vector<double>& x, std::size_t batch, std::size_t ch,
                                  std::size_t len) {
  ChannelStats s{std::vector<double>(ch), std::vector<double>(ch)};
  const long double n = static_cast<long double>(batch * len);
  for (std::size_t c = 0; c < ch; ++c) {
    long double sum = 0.0L;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < len; ++t) sum += x[(b * ch + c) * len + t];
    const long double mean = sum / n;
    long double ss = 0.0L;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < len; ++t) {
        const long double d = x[(b * ch + c) * len + t] - mean;
        ss += d * d;
      }
    s.mean[c] = static_cast<double>(mean);
    s.biased_var[c] = static_cast<double>(ss / n);
  }
  return s;
}

/// Gait percent of time t inside one FLP -> FSP -> FLP cycle: linear 0 -> 40
/// across swing, 40 -> 100 across stance.
inline double cycle_percent(double t, double lift, double strike, double next_lift) {
  if (t <= strike) return 40.0 * (t - lift) / (strike - lift);
  return 40.0 + 60.0 * (t - strike) / (next_lift - strike);
}

/// One Adam step on a scalar with textbook bias correction.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double param, double grad) {
    ++t;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return param - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace gaitmtl::oracle
