#include "test_util.hpp"

using namespace weldar;
using namespace weldar::testing;

namespace {

/// Reference debounce automaton over a single parameter: the state changes
/// at the first frame whose trailing `d` frames all share a new state.
std::vector<std::pair<RangeState, std::size_t>> reference_changes(const std::vector<RangeState>& st, int d) {
    std::vector<std::pair<RangeState, std::size_t>> out;
    if (st.empty()) return out;
    RangeState cur = st[0];
    out.push_back({cur, 0});
    for (std::size_t i = 1; i < st.size(); ++i) {
        if (st[i] == cur || i + 1 < static_cast<std::size_t>(d)) continue;
        bool all = true;
        for (std::size_t j = i + 1 - d; j <= i; ++j) all = all && st[j] == st[i];
        if (all) {
            cur = st[i];
            out.push_back({cur, i});
        }
    }
    return out;
}

std::vector<SkillSample> speed_line(const std::vector<double>& speeds) {
    auto line = nominal_line(speeds.size());
    for (std::size_t i = 0; i < speeds.size(); ++i) line[i].speed_ipm = speeds[i];
    return line;
}

}  // namespace

TEST(Classify, Examples) {
    const TargetRanges r;
    EXPECT_EQ(classify(10, r.ctwd_mm), RangeState::Within);
    EXPECT_EQ(classify(6, r.ctwd_mm), RangeState::Within);
    EXPECT_EQ(classify(15, r.ctwd_mm), RangeState::Within);
    EXPECT_EQ(classify(5.999, r.ctwd_mm), RangeState::Below);
    const auto st = classify(26, r.speed_ipm);
    EXPECT_EQ(st, RangeState::Above);
    EXPECT_EQ(hint_for(Parameter::Speed, st, SkillSample{}), Hint::TooFast);
    EXPECT_EQ(hint_label(Hint::TooFast), "Too fast");
    EXPECT_EQ(hint_label(hint_for(Parameter::Ctwd, RangeState::Above, SkillSample{})), "Too far from table");
    EXPECT_EQ(hint_for(Parameter::Speed, RangeState::Below, SkillSample{}), Hint::TooSlow);
}

TEST(FeedbackStream, AllWithinIsOneOkEvent) {
    const auto line = nominal_line(300);
    const auto ev = feedback_stream(line, TargetRanges{});
    ASSERT_EQ(ev.size(), 4u);
    for (const auto& e : ev) {
        EXPECT_EQ(e.state, RangeState::Within);
        EXPECT_EQ(e.hint, Hint::Ok);
        EXPECT_EQ(e.onset, line.front().timestamp);
        EXPECT_EQ(e.offset, line.back().timestamp);
    }
}

TEST(FeedbackStream, ShortBlipIsDebounced) {
    std::vector<double> speeds(200, 20.0);
    for (int i = 50; i < 53; ++i) speeds[i] = 30.0;
    const auto ev = feedback_stream(speed_line(speeds), TargetRanges{}, 5, {Parameter::Speed});
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].hint, Hint::Ok);
}

TEST(FeedbackStream, SustainedBelowOpensAtFifthFrame) {
    std::vector<double> speeds(200, 20.0);
    for (int i = 100; i < 200; ++i) speeds[i] = 10.0;
    const auto line = speed_line(speeds);
    const auto ev = feedback_stream(line, TargetRanges{}, 5, {Parameter::Speed});
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[1].state, RangeState::Below);
    EXPECT_EQ(ev[1].hint, Hint::TooSlow);
    EXPECT_EQ(ev[1].onset, line[104].timestamp);
    EXPECT_EQ(ev[0].offset, line[104].timestamp);
    EXPECT_EQ(ev[1].offset, line.back().timestamp);
}

TEST(FeedbackStream, MatchesReferenceAutomaton) {
    std::mt19937_64 rng(17);
    const TargetRanges ranges;
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 1 + static_cast<int>(rng() % 7);
        const std::size_t n = 20 + rng() % 300;
        std::vector<double> speeds;
        double v = 20;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 6 == 0) v = std::vector<double>{10, 20, 30, 15, 25}[rng() % 5];
            speeds.push_back(v);
        }
        std::vector<RangeState> st;
        for (double s : speeds) st.push_back(classify(s, ranges.speed_ipm));
        const auto line = speed_line(speeds);
        const auto ev = feedback_stream(line, ranges, d, {Parameter::Speed});
        const auto ref = reference_changes(st, d);
        ASSERT_EQ(ev.size(), ref.size()) << "trial " << trial;
        for (std::size_t i = 0; i < ev.size(); ++i) {
            EXPECT_EQ(ev[i].state, ref[i].first);
            EXPECT_EQ(ev[i].onset, line[ref[i].second].timestamp);
            const double expected_offset = i + 1 < ref.size() ? line[ref[i + 1].second].timestamp : line.back().timestamp;
            EXPECT_EQ(ev[i].offset, expected_offset);
        }
    }
}

TEST(FeedbackStream, UnusableFramesAreSkipped) {
    auto line = nominal_line(100);
    for (int i = 0; i < 100; ++i) line[i].speed_ipm = 30.0;
    for (int i = 0; i < 100; i += 2) line[i].drift_flag = true;
    line[1].valid = false;
    const auto ev = feedback_stream(line, TargetRanges{}, 5, {Parameter::Speed});
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].onset, line[3].timestamp);
    EXPECT_EQ(ev[0].state, RangeState::Above);
}

TEST(FeedbackStream, WorkAngleHintFollowsTiltSide) {
    auto line = nominal_line(20);
    for (auto& s : line) {
        s.work_angle_deg = 70;
        s.lateral_tilt_deg = -20;
    }
    const auto ev = feedback_stream(line, TargetRanges{}, 5, {Parameter::WorkAngle});
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].hint, Hint::TiltLeft);
}

TEST(SummarizeLine, SevenTwoOne) {
    const auto calib = bench_calibration();
    auto line = speed_line({20, 20, 20, 20, 20, 20, 20, 30, 30, 10});
    const auto s = summarize_line(line, TargetRanges{}, default_line(calib), calib);
    EXPECT_DOUBLE_EQ(s.of(Parameter::Speed).pct_within, 70.0);
    EXPECT_DOUBLE_EQ(s.of(Parameter::Speed).pct_above, 20.0);
    EXPECT_DOUBLE_EQ(s.of(Parameter::Speed).pct_below, 10.0);
    EXPECT_EQ(s.of(Parameter::Speed).frame_count, 10u);
}

TEST(SummarizeLine, AllWithinAndConstantSpeed) {
    const auto calib = bench_calibration();
    const auto s = summarize_line(nominal_line(50), TargetRanges{}, default_line(calib), calib);
    for (auto p : kAllParameters) {
        EXPECT_DOUBLE_EQ(s.of(p).pct_within, 100.0);
        EXPECT_DOUBLE_EQ(s.of(p).pct_above, 0.0);
        EXPECT_DOUBLE_EQ(s.of(p).pct_below, 0.0);
    }
    EXPECT_DOUBLE_EQ(s.smoothness_ipm2, 0.0);
    EXPECT_DOUBLE_EQ(s.accuracy_mm, 0.0);
    EXPECT_FALSE(s.excluded);
}

TEST(SummarizeLine, BruteForceCountsOnRandomLines) {
    const auto calib = bench_calibration();
    const TargetRanges ranges;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> c(0, 25), a(-20, 20), w(60, 90), v(5, 35);
    for (int trial = 0; trial < 200; ++trial) {
        auto line = nominal_line(1 + rng() % 200);
        for (auto& s : line) {
            s.ctwd_mm = c(rng);
            s.travel_angle_deg = a(rng);
            s.work_angle_deg = w(rng);
            s.speed_ipm = rng() % 5 == 0 ? std::nullopt : std::optional<double>(v(rng));
            s.drift_flag = rng() % 10 == 0;
            s.valid = rng() % 12 != 0;
        }
        const auto sum = summarize_line(line, ranges, default_line(calib), calib);
        for (auto p : kAllParameters) {
            std::size_t in = 0, above = 0, below = 0;
            for (const auto& s : line) {
                if (!s.valid || s.drift_flag) continue;
                double x = 0;
                if (p == Parameter::Ctwd) x = s.ctwd_mm;
                if (p == Parameter::TravelAngle) x = s.travel_angle_deg;
                if (p == Parameter::WorkAngle) x = s.work_angle_deg;
                if (p == Parameter::Speed) {
                    if (!s.speed_ipm) continue;
                    x = *s.speed_ipm;
                }
                const Range r = ranges.of(p);
                (x < r.lo ? below : x > r.hi ? above : in)++;
            }
            const double n = static_cast<double>(in + above + below);
            const auto& ps = sum.of(p);
            ASSERT_EQ(ps.frame_count, in + above + below);
            if (n == 0) continue;
            EXPECT_EQ(ps.pct_within, 100.0 * in / n);
            EXPECT_EQ(ps.pct_above, 100.0 * above / n);
            EXPECT_EQ(ps.pct_below, 100.0 * below / n);
            EXPECT_NEAR(ps.pct_within + ps.pct_above + ps.pct_below, 100.0, 1e-9);
        }
    }
}

TEST(SummarizeLine, NoValidFramesIsExcluded) {
    const auto calib = bench_calibration();
    auto line = nominal_line(10);
    for (auto& s : line) s.valid = false;
    const auto s = summarize_line(line, TargetRanges{}, default_line(calib), calib);
    EXPECT_TRUE(s.excluded);
    EXPECT_NE(s.exclusion_reason.find("EmptyLineError"), std::string::npos);
}

TEST(SummarizeLine, SmoothnessIsPopulationVariance) {
    const auto calib = bench_calibration();
    const auto s = summarize_line(speed_line({18, 20, 22, 20}), TargetRanges{}, default_line(calib), calib);
    EXPECT_DOUBLE_EQ(s.smoothness_ipm2, 2.0);
}
