#pragma once

// Builds foot-switch streams from a known event schedule, so labeling can be
// checked against the schedule itself.

#include <cmath>
#include <cstddef>
#include <vector>

#include "gaitmtl/labeler.hpp"

namespace gaitmtl::testing {

/// Foot lifts at `lifts[k]`, strikes at `strikes[k]` (lifts[k] < strikes[k] <
/// lifts[k+1]). Stance is split 15 % heel strike / mid-stance / 20 % heel off.
struct Schedule {
  std::vector<double> lifts;
  std::vector<double> strikes;
};

inline FsrSample fsr_at(const Schedule& s, double t) {
  // Before the first lift the foot is in late stance.
  if (t < s.lifts.front()) return {t, 1.0, 1.0};
  std::size_t k = 0;
  while (k + 1 < s.lifts.size() && t >= s.lifts[k + 1]) ++k;
  if (t < s.strikes[k]) return {t, 0.0, 0.0};
  const double next = k + 1 < s.lifts.size() ? s.lifts[k + 1] : s.strikes[k] + 1.0;
  const double u = (t - s.strikes[k]) / (next - s.strikes[k]);
  if (u < 0.15) return {t, 0.0, 1.0};
  if (u < 0.80) return {t, 1.0, 1.0};
  return {t, 1.0, 0.0};
}

inline std::vector<FsrSample> sample_schedule(const Schedule& s, double t_end, double rate = 50.0) {
  std::vector<FsrSample> out;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t >= t_end) break;
    out.push_back(fsr_at(s, t));
  }
  return out;
}

/// Irregular cadence: stride periods cycle through `periods`, swing takes 40 %
/// of each stride.
inline Schedule irregular_schedule(double first_lift, const std::vector<double>& periods,
                                   std::size_t cycles, double rate = 50.0) {
  // Event times are snapped to the same i / rate values the sampler produces.
  const auto snap = [rate](double x) { return static_cast<double>(std::llround(x * rate)) / rate; };
  Schedule s;
  double t = first_lift;
  for (std::size_t k = 0; k < cycles; ++k) {
    const double p = periods[k % periods.size()];
    s.lifts.push_back(snap(t));
    s.strikes.push_back(snap(t + 0.4 * p));
    t += p;
  }
  s.lifts.push_back(snap(t));
  s.strikes.push_back(snap(t + 0.4 * periods[cycles % periods.size()]));
  return s;
}

}  // namespace gaitmtl::testing
