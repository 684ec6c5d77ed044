#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fsr_schedule.hpp"
#include "gaitmtl/errors.hpp"
#include "gaitmtl/labeler.hpp"
#include "oracles.hpp"

namespace gaitmtl {
namespace {

using testing::irregular_schedule;
using testing::sample_schedule;

PhaseKind oracle_kind(const FsrSample& s, double thr) {
  const bool f = s.front > thr, b = s.back > thr;
  if (f) return b ? PhaseKind::kMidStance : PhaseKind::kHeelOff;
  return b ? PhaseKind::kHeelStrike : PhaseKind::kSwing;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::kIo;
}

TEST(ContactSectionsTest, MatchesPerSampleClassifierOnLongRuns) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> run(2, 12), state(0, 3);
  std::vector<FsrSample> fsr;
  std::vector<PhaseKind> kinds;
  int prev = -1;
  while (fsr.size() < 600) {
    int s;
    do s = state(rng); while (s == prev);
    prev = s;
    const int n = run(rng);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(fsr.size()) * 0.02;
      fsr.push_back({t, (s & 1) ? 0.9 : 0.1, (s & 2) ? 0.8 : 0.05});
    }
  }
  // Expected: run-length encoding of the per-sample classification.
  std::vector<PhaseSection> want;
  for (std::size_t i = 0; i < fsr.size(); ++i) {
    const PhaseKind k = oracle_kind(fsr[i], 0.5);
    if (want.empty() || want.back().kind != k) {
      if (!want.empty()) want.back().end_t = fsr[i].t;
      want.push_back({k, fsr[i].t, fsr[i].t});
    }
  }
  want.back().end_t = fsr.back().t + 0.02;
  const auto got = contact_sections(fsr);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].kind, want[i].kind) << i;
    EXPECT_NEAR(got[i].start_t, want[i].start_t, 1e-12);
    EXPECT_NEAR(got[i].end_t, want[i].end_t, 1e-12);
  }
}

TEST(ContactSectionsTest, SingleSampleChatterIsAbsorbed) {
  std::vector<FsrSample> fsr;
  for (int i = 0; i < 30; ++i) {
    const double t = 0.02 * i;
    const bool blip = i == 12;
    fsr.push_back({t, blip ? 0.0 : 1.0, 1.0});
  }
  const auto s = contact_sections(fsr);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].kind, PhaseKind::kMidStance);
  EXPECT_NEAR(s[0].end_t, 0.6, 1e-12);
}

TEST(ContactSectionsTest, LeadingChatterJoinsFollowingSection) {
  std::vector<FsrSample> fsr;
  for (int i = 0; i < 20; ++i) fsr.push_back({0.02 * i, i == 0 ? 1.0 : 0.0, 0.0});
  const auto s = contact_sections(fsr);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].kind, PhaseKind::kSwing);
  EXPECT_EQ(s[0].start_t, 0.0);
}

TEST(ContactSectionsTest, InputValidation) {
  EXPECT_EQ(code_of([] { contact_sections({}); }), Errc::kEmptyStream);
  std::vector<FsrSample> back{{0.0, 0, 0}, {0.0, 0, 0}};
  EXPECT_EQ(code_of([&] { contact_sections(back); }), Errc::kInvalidData);
}

TEST(DetectEventsTest, SectionTransitions) {
  const std::vector<PhaseSection> s{{PhaseKind::kMidStance, 0.0, 0.3},
                                    {PhaseKind::kHeelOff, 0.3, 0.5},
                                    {PhaseKind::kSwing, 0.5, 0.9},
                                    {PhaseKind::kHeelStrike, 0.9, 1.0},
                                    {PhaseKind::kMidStance, 1.0, 1.4},
                                    {PhaseKind::kSwing, 1.4, 1.8},
                                    {PhaseKind::kMidStance, 1.8, 2.0}};
  const auto e = detect_events(s);
  const std::vector<GaitEvent> want{{GaitEventKind::kFootLift, 0.5},
                                    {GaitEventKind::kFootStrike, 0.9},
                                    {GaitEventKind::kFootLift, 1.4},
                                    {GaitEventKind::kFootStrike, 1.8}};
  EXPECT_EQ(e, want);
}

TEST(DetectEventsTest, LeadingSwingEmitsFootLift) {
  const std::vector<PhaseSection> s{{PhaseKind::kSwing, 0.0, 0.4},
                                    {PhaseKind::kMidStance, 0.4, 1.0}};
  const auto e = detect_events(s);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].kind, GaitEventKind::kFootLift);
  EXPECT_EQ(e[0].t, 0.0);
}

TEST(DetectEventsTest, OverlapIsLabelingError) {
  const std::vector<PhaseSection> s{{PhaseKind::kSwing, 0.0, 0.5},
                                    {PhaseKind::kMidStance, 0.4, 1.0}};
  EXPECT_EQ(code_of([&] { detect_events(s); }), Errc::kLabelingError);
}

TEST(AssignPercentTest, NonAlternatingEventsRejected) {
  const std::vector<GaitEvent> e{{GaitEventKind::kFootLift, 0.0},
                                 {GaitEventKind::kFootLift, 1.0},
                                 {GaitEventKind::kFootStrike, 1.5}};
  const std::vector<double> t{0.5};
  EXPECT_EQ(code_of([&] { assign_percent(t, e); }), Errc::kLabelingError);
}

TEST(AssignPercentTest, NeedsOneFullCycle) {
  const std::vector<GaitEvent> e{{GaitEventKind::kFootLift, 0.0}, {GaitEventKind::kFootStrike, 0.4}};
  const std::vector<double> t{0.1};
  EXPECT_EQ(code_of([&] { assign_percent(t, e); }), Errc::kLabelingError);
}

TEST(AssignPercentTest, AnchorsAndSpan) {
  const std::vector<GaitEvent> e{{GaitEventKind::kFootLift, 1.0},
                                 {GaitEventKind::kFootStrike, 1.4},
                                 {GaitEventKind::kFootLift, 2.0},
                                 {GaitEventKind::kFootStrike, 2.5}};
  const std::vector<double> t{0.9, 1.0, 1.2, 1.4, 1.7, 1.99, 2.0, 2.3};
  const auto p = assign_percent(t, e);
  EXPECT_FALSE(p[0].has_value());
  EXPECT_DOUBLE_EQ(*p[1], 0.0);
  EXPECT_DOUBLE_EQ(*p[2], 20.0);
  EXPECT_DOUBLE_EQ(*p[3], 40.0);
  EXPECT_DOUBLE_EQ(*p[4], 70.0);
  EXPECT_NEAR(*p[5], 99.0, 1e-9);
  EXPECT_FALSE(p[6].has_value());  // the last FLP closes the labeled span
  EXPECT_FALSE(p[7].has_value());
  const auto c = assign_cycles(t, e);
  EXPECT_EQ(c, (std::vector<int>{-1, 0, 0, 0, 0, 0, -1, -1}));
}

TEST(AssignPercentTest, IrregularCadenceMatchesAnalyticOracle) {
  // Events placed on the 50 Hz grid, so detection must recover them exactly.
  const auto sched = irregular_schedule(0.3, {1.2, 0.9, 1.5, 1.1, 1.7}, 12);
  const auto fsr = sample_schedule(sched, sched.lifts.back() + 0.5);
  const auto events = detect_events(contact_sections(fsr));
  std::vector<double> t;
  for (const auto& s : fsr) t.push_back(s.t);
  const auto p = assign_percent(t, events);

  std::size_t labeled = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    const bool inside = ti >= sched.lifts.front() - 1e-12 && ti < sched.lifts.back() - 1e-12;
    ASSERT_EQ(p[i].has_value(), inside) << "t=" << ti;
    if (!inside) continue;
    std::size_t k = 0;
    while (ti >= sched.lifts[k + 1] - 1e-12) ++k;
    const double want = oracle::cycle_percent(ti, sched.lifts[k], sched.strikes[k], sched.lifts[k + 1]);
    ASSERT_NEAR(*p[i], want, 1e-9) << "t=" << ti;
    ++labeled;
  }
  EXPECT_GT(labeled, 600u);
}

TEST(AssignPercentTest, OffGridEventsDetectedWithinOneSample) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> period(0.85, 1.75);
  std::vector<double> periods(15);
  for (auto& p : periods) p = period(rng);
  const auto sched = irregular_schedule(0.237, periods, 15);
  const auto fsr = sample_schedule(sched, sched.lifts.back() + 0.4);
  const auto events = detect_events(contact_sections(fsr));
  std::vector<double> lifts, strikes;
  for (const auto& e : events) (e.kind == GaitEventKind::kFootLift ? lifts : strikes).push_back(e.t);
  ASSERT_EQ(lifts.size(), sched.lifts.size());
  for (std::size_t k = 0; k < lifts.size(); ++k) {
    EXPECT_GE(lifts[k], sched.lifts[k] - 1e-12);
    EXPECT_LE(lifts[k] - sched.lifts[k], 0.02 + 1e-12);
  }
  for (std::size_t k = 0; k < std::min(strikes.size(), sched.strikes.size()); ++k) {
    EXPECT_LE(std::fabs(strikes[k] - sched.strikes[k]), 0.02 + 1e-12);
  }
}

TEST(PhaseXYTest, Anchors) {
  const auto a = to_phase_xy(0.0);
  EXPECT_EQ(a.x, 1.0);
  EXPECT_EQ(a.y, 0.0);
  const auto b = to_phase_xy(100.0);
  EXPECT_EQ(b.x, 1.0);
  EXPECT_EQ(b.y, 0.0);
  const auto q = to_phase_xy(25.0);
  EXPECT_NEAR(q.x, 0.0, 1e-15);
  EXPECT_NEAR(q.y, 1.0, 1e-15);
  const auto h = to_phase_xy(50.0);
  EXPECT_NEAR(h.x, -1.0, 1e-15);
  EXPECT_NEAR(h.y, 0.0, 1e-15);
  EXPECT_EQ(make_label(100.0).percent, 0.0);
}

TEST(PhaseXYTest, RoundTripAndScaleInvariance) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pct(0.0, 100.0), scale(1e-3, 1e3);
  for (int i = 0; i < 100000; ++i) {
    const double p = pct(rng);
    const auto xy = to_phase_xy(p);
    ASSERT_NEAR(from_phase_xy(xy.x, xy.y), p, 1e-9);
    const double s = scale(rng);
    ASSERT_NEAR(from_phase_xy(s * xy.x, s * xy.y), from_phase_xy(xy.x, xy.y), 1e-9);
  }
}

TEST(PhaseXYTest, Errors) {
  EXPECT_EQ(code_of([] { to_phase_xy(-0.1); }), Errc::kInvalidLabel);
  EXPECT_EQ(code_of([] { to_phase_xy(100.5); }), Errc::kInvalidLabel);
  EXPECT_EQ(code_of([] { from_phase_xy(0.0, 0.0); }), Errc::kUndefinedPhase);
}

TEST(CircularRmseTest, WrapsAroundTheCycle) {
  const std::vector<double> p{99.0}, t{1.0};
  EXPECT_DOUBLE_EQ(circular_rmse(p, t), 2.0);
  const std::vector<double> p2{0.0, 50.0, 10.0}, t2{50.0, 0.0, 10.0};
  EXPECT_DOUBLE_EQ(circular_rmse(p2, t2), std::sqrt(2.0 * 2500.0 / 3.0));
  EXPECT_EQ(circular_rmse(t2, t2), 0.0);
}

TEST(CircularRmseTest, ConstantPredictorOnUniformPhases) {
  // Wrapped distance to a fixed point is uniform on [0, 50]; its RMS is 50/sqrt(3).
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pct(0.0, 100.0);
  std::vector<double> truth(200000), pred(200000, 0.0);
  for (auto& v : truth) v = pct(rng);
  EXPECT_NEAR(circular_rmse(pred, truth), 50.0 / std::sqrt(3.0), 0.1);
}

TEST(CircularRmseTest, LengthMismatchRejected) {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  EXPECT_EQ(code_of([&] { circular_rmse(a, b); }), Errc::kInvalidData);
}

}  // namespace
}  // namespace gaitmtl
