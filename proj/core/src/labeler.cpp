#include "gaitmtl/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gaitmtl/errors.hpp"

namespace gaitmtl {

namespace {

PhaseKind classify(const FsrSample& s, double threshold) {
  const bool front = s.front > threshold;
  const bool back = s.back > threshold;
  if (!front && !back) return PhaseKind::kSwing;
  if (!front && back) return PhaseKind::kHeelStrike;
  if (front && back) return PhaseKind::kMidStance;
  return PhaseKind::kHeelOff;
}

void merge_equal_neighbors(std::vector<PhaseSection>& sections) {
  std::vector<PhaseSection> merged;
  merged.reserve(sections.size());
  for (const auto& s : sections) {
    if (!merged.empty() && merged.back().kind == s.kind) {
      merged.back().end_t = s.end_t;
    } else {
      merged.push_back(s);
    }
  }
  sections = std::move(merged);
}

void check_alternation(const std::vector<GaitEvent>& events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].kind == events[i - 1].kind) {
      fail(Errc::kLabelingError,
           "gait events do not alternate at t=" + std::to_string(events[i].t));
    }
  }
}

}  // namespace

std::string_view to_string(PhaseKind kind) noexcept {
  switch (kind) {
    case PhaseKind::kSwing: return "swing";
    case PhaseKind::kHeelStrike: return "heel_strike";
    case PhaseKind::kMidStance: return "mid_stance";
    case PhaseKind::kHeelOff: return "heel_off";
  }
  return "unknown";
}

std::vector<PhaseSection> contact_sections(std::span<const FsrSample> fsr, double threshold,
                                           double min_section_s) {
  if (fsr.empty()) fail(Errc::kEmptyStream, "no FSR samples");
  if (fsr.size() < 2) fail(Errc::kInsufficientData, "need at least 2 FSR samples");
  for (std::size_t i = 0; i < fsr.size(); ++i) {
    if (!std::isfinite(fsr[i].t) || !std::isfinite(fsr[i].front) || !std::isfinite(fsr[i].back)) {
      fail(Errc::kInvalidData, "non-finite FSR sample at index " + std::to_string(i));
    }
    if (i > 0 && !(fsr[i].t > fsr[i - 1].t)) {
      fail(Errc::kInvalidData, "FSR timestamps not strictly increasing at index " +
                                   std::to_string(i));
    }
  }

  std::vector<PhaseSection> sections;
  for (std::size_t i = 0; i < fsr.size(); ++i) {
    const PhaseKind kind = classify(fsr[i], threshold);
    if (sections.empty() || sections.back().kind != kind) {
      if (!sections.empty()) sections.back().end_t = fsr[i].t;
      sections.push_back({kind, fsr[i].t, fsr[i].t});
    }
  }
  // The final section extends one sample period past the last sample.
  const double last_dt = fsr[fsr.size() - 1].t - fsr[fsr.size() - 2].t;
  sections.back().end_t = fsr.back().t + last_dt;

  // Debounce. Tolerance keeps exactly-two-sample runs at 50 Hz.
  const double min_len = min_section_s - 1e-9;
  bool changed = true;
  while (changed && sections.size() > 1) {
    changed = false;
    for (std::size_t i = 0; i < sections.size(); ++i) {
      if (sections[i].end_t - sections[i].start_t >= min_len) continue;
      if (i == 0) {
        sections[1].start_t = sections[0].start_t;
      } else {
        sections[i - 1].end_t = sections[i].end_t;
      }
      sections.erase(sections.begin() + static_cast<std::ptrdiff_t>(i));
      merge_equal_neighbors(sections);
      changed = true;
      break;
    }
  }
  return sections;
}

std::vector<GaitEvent> detect_events(std::span<const PhaseSection> sections) {
  if (sections.empty()) fail(Errc::kLabelingError, "no phase sections");
  std::vector<GaitEvent> events;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& s = sections[i];
    if (!(s.end_t > s.start_t)) {
      fail(Errc::kLabelingError, "empty phase section at t=" + std::to_string(s.start_t));
    }
    if (i > 0 && s.start_t < sections[i - 1].end_t) {
      fail(Errc::kLabelingError, "overlapping phase sections at t=" + std::to_string(s.start_t));
    }
    if (s.kind == PhaseKind::kSwing) {
      events.push_back({GaitEventKind::kFootLift, s.start_t});
    } else if (i > 0 && sections[i - 1].kind == PhaseKind::kSwing) {
      events.push_back({GaitEventKind::kFootStrike, s.start_t});
    }
  }
  check_alternation(events);
  return events;
}

namespace {

struct Cycle {
  double lift;
  double strike;
  double next_lift;
};

std::vector<Cycle> cycles_from(std::span<const GaitEvent> events) {
  std::vector<GaitEvent> ev(events.begin(), events.end());
  check_alternation(ev);
  std::size_t first = 0;
  while (first < ev.size() && ev[first].kind != GaitEventKind::kFootLift) ++first;
  std::vector<Cycle> cycles;
  for (std::size_t i = first; i + 2 < ev.size(); i += 2) {
    const Cycle c{ev[i].t, ev[i + 1].t, ev[i + 2].t};
    if (!(c.strike > c.lift) || !(c.next_lift > c.strike)) {
      fail(Errc::kLabelingError, "zero-duration gait segment at t=" + std::to_string(c.lift));
    }
    cycles.push_back(c);
  }
  if (cycles.empty()) fail(Errc::kLabelingError, "events do not span a full FLP->FLP cycle");
  return cycles;
}

template <typename Fn>
void walk_cycles(std::span<const double> timestamps, const std::vector<Cycle>& cycles, Fn&& fn) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    const double t = timestamps[i];
    if (i > 0 && t < timestamps[i - 1]) c = 0;
    while (c < cycles.size() && t >= cycles[c].next_lift) ++c;
    if (c < cycles.size() && t >= cycles[c].lift) {
      fn(i, c, cycles[c]);
    }
  }
}

}  // namespace

std::vector<std::optional<double>> assign_percent(std::span<const double> timestamps,
                                                  std::span<const GaitEvent> events) {
  const auto cycles = cycles_from(events);
  std::vector<std::optional<double>> out(timestamps.size());
  walk_cycles(timestamps, cycles, [&](std::size_t i, std::size_t, const Cycle& c) {
    const double t = timestamps[i];
    double p;
    if (t <= c.strike) {
      p = kFootStrikePercent * (t - c.lift) / (c.strike - c.lift);
    } else {
      p = kFootStrikePercent +
          (100.0 - kFootStrikePercent) * (t - c.strike) / (c.next_lift - c.strike);
    }
    if (p >= 100.0) p = 0.0;
    out[i] = p;
  });
  return out;
}

std::vector<int> assign_cycles(std::span<const double> timestamps,
                               std::span<const GaitEvent> events) {
  const auto cycles = cycles_from(events);
  std::vector<int> out(timestamps.size(), -1);
  walk_cycles(timestamps, cycles, [&](std::size_t i, std::size_t c, const Cycle&) {
    out[i] = static_cast<int>(c);
  });
  return out;
}

PhaseXY to_phase_xy(double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    fail(Errc::kInvalidLabel, "gait percent out of [0, 100]: " + std::to_string(percent));
  }
  if (percent == 100.0) percent = 0.0;
  const double theta = percent * 2.0 * std::numbers::pi / 100.0;
  return {std::cos(theta), std::sin(theta)};
}

double from_phase_xy(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    fail(Errc::kUndefinedPhase, "non-finite phase variables");
  }
  if (x == 0.0 && y == 0.0) fail(Errc::kUndefinedPhase, "phase undefined at the origin");
  double theta = std::atan2(y, x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  double p = theta * 100.0 / (2.0 * std::numbers::pi);
  if (p >= 100.0) p = 0.0;
  return p;
}

GaitLabel make_label(double percent) {
  const auto xy = to_phase_xy(percent);
  return {percent == 100.0 ? 0.0 : percent, xy.x, xy.y};
}

double circular_rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) {
    fail(Errc::kInvalidData, "prediction/truth length mismatch");
  }
  if (predicted.empty()) fail(Errc::kInvalidData, "RMSE of an empty sequence");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = std::fabs(predicted[i] - truth[i]);
    const double wrapped = std::min(d, 100.0 - d);
    sum += wrapped * wrapped;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

}  // namespace gaitmtl
