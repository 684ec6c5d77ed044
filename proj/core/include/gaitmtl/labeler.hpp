#pragma once

// Gait-cycle labeling from a two-zone foot-switch insole. Foot lift (FLP) is
// anchored at 0 % of the cycle, foot strike (FSP) at 40 %, and every sample in
// between is interpolated linearly. Percent values are also expressed on the
// unit circle so the 100 -> 0 wrap is continuous.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gaitmtl {

struct FsrSample {
  double t = 0.0;
  double front = 0.0;
  double back = 0.0;
};

enum class PhaseKind { kSwing, kHeelStrike, kMidStance, kHeelOff };

std::string_view to_string(PhaseKind kind) noexcept;

struct PhaseSection {
  PhaseKind kind = PhaseKind::kSwing;
  double start_t = 0.0;
  double end_t = 0.0;

  friend bool operator==(const PhaseSection&, const PhaseSection&) = default;
};

enum class GaitEventKind { kFootLift, kFootStrike };

struct GaitEvent {
  GaitEventKind kind = GaitEventKind::kFootLift;
  double t = 0.0;

  friend bool operator==(const GaitEvent&, const GaitEvent&) = default;
};

struct PhaseXY {
  double x = 1.0;
  double y = 0.0;
};

struct GaitLabel {
  double percent = 0.0;
  double x = 1.0;
  double y = 0.0;
};

inline constexpr double kFootStrikePercent = 40.0;
inline constexpr double kDefaultContactThreshold = 0.5;
/// Sections shorter than this are treated as switch chatter.
inline constexpr double kMinSectionSeconds = 0.04;

/// Classifies each sample by (front > threshold, back > threshold), merges runs
/// of equal kind and absorbs runs shorter than `min_section_s` into the
/// preceding section (the following one, for a leading run).
std::vector<PhaseSection> contact_sections(std::span<const FsrSample> fsr,
                                           double threshold = kDefaultContactThreshold,
                                           double min_section_s = kMinSectionSeconds);

/// FLP at every entry into swing (including a leading swing section), FSP at
/// every exit from swing into contact. Throws LabelingError if the resulting
/// sequence does not alternate or the sections are out of order.
std::vector<GaitEvent> detect_events(std::span<const PhaseSection> sections);

/// Per-timestamp gait percent. Samples outside [first FLP, last FLP) are
/// unlabeled.
std::vector<std::optional<double>> assign_percent(std::span<const double> timestamps,
                                                  std::span<const GaitEvent> events);

/// Zero-based index of the FLP->FLP cycle each timestamp falls in, -1 when
/// outside the labeled span.
std::vector<int> assign_cycles(std::span<const double> timestamps,
                               std::span<const GaitEvent> events);

PhaseXY to_phase_xy(double percent);
double from_phase_xy(double x, double y);
GaitLabel make_label(double percent);

/// RMSE over the wraparound distance min(|d|, 100 - |d|).
double circular_rmse(std::span<const double> predicted, std::span<const double> truth);

}  // namespace gaitmtl
