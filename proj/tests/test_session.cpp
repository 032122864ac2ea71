#include "test_util.hpp"

using namespace weldar;
using namespace weldar::testing;

namespace {

SessionConfig config(bool calibrated = true) {
    SessionConfig c;
    c.participant_id = "p01";
    if (calibrated) c.calibration = bench_calibration();
    return c;
}

}  // namespace

TEST(Session, RequiresCalibration) {
    SessionEngine e(config(false));
    EXPECT_THROW(e.start_line(), UncalibratedError);
    e.set_calibration(bench_calibration());
    EXPECT_NO_THROW(e.start_line());
    EXPECT_TRUE(e.header().calibration.has_value());
}

TEST(Session, OutOfOrderFrameLeavesStateUnchanged) {
    SessionEngine e(config());
    e.start_line();
    const auto frames = gen_pass(session_pass(*e.calibration(), 0, false), *e.calibration()).frames;
    for (int i = 0; i < 10; ++i) e.push_frame(frames[i]);
    EXPECT_THROW(e.push_frame(frames[5]), SequenceError);
    auto dup = frames[10];
    dup.timestamp = frames[9].timestamp;
    EXPECT_THROW(e.push_frame(dup), SequenceError);
    const auto r = e.push_frame(frames[10]);
    EXPECT_EQ(r.sample.frame_index, frames[10].frame_index);
    e.end_line();
    EXPECT_EQ(e.lines().back().frames.size(), 11u);
}

TEST(Session, ProtocolMisuse) {
    SessionEngine e(config());
    EXPECT_THROW(e.push_frame(PoseFrame{}), ProtocolError);
    EXPECT_THROW(e.end_line(), ProtocolError);
    e.start_line();
    EXPECT_THROW(e.start_line(), ProtocolError);
    EXPECT_THROW(e.tap_recalibrate(PoseFrame{}, Vec3::Zero()), ProtocolError);
    e.abort_line();
    EXPECT_FALSE(e.line_active());
    EXPECT_TRUE(e.lines().empty());
}

TEST(Session, IdealPassesWalkTheStandardPlan) {
    const auto e = run_session(config(), false);
    EXPECT_EQ(e.lines().size(), 34u);
    EXPECT_TRUE(e.lesson().complete);
    for (const auto& l : e.lines()) {
        EXPECT_TRUE(l.screening.usable());
        EXPECT_EQ(l.assisted, l.module != ModuleKind::Test);
        if (!l.assisted) {
            EXPECT_TRUE(l.events.empty());
        }
    }
    EXPECT_EQ(e.lines().front().events.size(), 1u);  // CTWD module tracks one parameter
    EXPECT_EQ(e.lines()[20].events.size(), 4u);       // combination tracks all four
}

TEST(Session, UnassistedOverrideSilencesFeedback) {
    SessionEngine e(config());
    e.set_unassisted(true);
    EXPECT_TRUE(e.feedback_parameters_now().empty());
    const auto& rec = weld_line(e, session_pass(*e.calibration(), 0));
    EXPECT_FALSE(rec.assisted);
    EXPECT_TRUE(rec.events.empty());
    EXPECT_FALSE(rec.samples.empty());
}

TEST(Session, ResumeRestoresCursorAndLines) {
    SessionEngine e(config());
    for (std::size_t n = 0; n < 7; ++n) weld_line(e, session_pass(*e.calibration(), n));
    const auto resumed = SessionEngine::resume(e.log());
    EXPECT_EQ(resumed.lesson(), e.lesson());
    EXPECT_EQ(resumed.lines().size(), 7u);
    EXPECT_EQ(to_json(resumed.log()), to_json(e.log()));
}

TEST(Session, ResumeKeepsLatestCalibration) {
    SessionEngine e(config());
    weld_line(e, session_pass(*e.calibration(), 0));
    const auto moved = CalibrationState::from_anchor(Pose{Vec3(0.01, 0, 0), Quat::Identity()},
                                                     e.calibration()->tip_offset());
    e.set_calibration(moved);
    weld_line(e, session_pass(moved, 1));
    const auto resumed = SessionEngine::resume(e.log());
    EXPECT_EQ(jsonio::write(*resumed.calibration()), jsonio::write(moved));
    EXPECT_EQ(jsonio::write(*resumed.header().calibration), jsonio::write(bench_calibration()));
}

TEST(Replay, OneTimesReproducesLog) {
    SessionEngine e(config());
    for (std::size_t n = 0; n < 6; ++n) weld_line(e, session_pass(*e.calibration(), n));
    const auto log = e.log();
    const auto r = replay(log);
    EXPECT_TRUE(r.identical);
    ASSERT_EQ(r.lines.size(), log.lines.size());
    for (std::size_t i = 0; i < r.lines.size(); ++i) {
        EXPECT_TRUE(r.lines[i].matches_log);
        EXPECT_EQ(r.lines[i].samples, log.lines[i].samples);
        EXPECT_EQ(r.lines[i].events, log.lines[i].events);
    }
}

TEST(Replay, DoubleSpeedHalvesTimestamps) {
    SessionEngine e(config());
    weld_line(e, session_pass(*e.calibration(), 3));
    const auto log = e.log();
    const auto r = replay(log, 2.0);
    EXPECT_TRUE(r.identical);
    const auto& orig = log.lines[0];
    for (std::size_t i = 0; i < orig.samples.size(); ++i)
        EXPECT_DOUBLE_EQ(r.lines[0].samples[i].timestamp, orig.samples[i].timestamp / 2.0);
    for (std::size_t i = 0; i < orig.events.size(); ++i) EXPECT_DOUBLE_EQ(r.lines[0].events[i].onset, orig.events[i].onset / 2.0);
    EXPECT_THROW(replay(log, 0.0), PreconditionError);
}

TEST(Replay, EmptyLog) {
    SessionEngine e(config());
    const auto r = replay(e.log());
    EXPECT_TRUE(r.lines.empty());
    EXPECT_TRUE(r.identical);
}

TEST(Replay, DetectsTamperedLog) {
    SessionEngine e(config());
    weld_line(e, session_pass(*e.calibration(), 0));
    auto log = e.log();
    log.lines[0].samples[40].ctwd_mm += 1e-9;
    EXPECT_FALSE(replay(log).identical);
}

TEST(OnlineOffline, StreamingEqualsBatch) {
    const auto e = run_session(config());
    const auto& h = e.header();
    for (const auto& rec : e.lines()) {
        const auto p = process_line(rec.frames, *rec.calibration, rec.line, h.ranges, h.settings,
                                    feedback_parameters(rec.module, rec.assisted));
        EXPECT_EQ(p.samples, rec.samples);
        EXPECT_EQ(p.events, rec.events);
        EXPECT_EQ(p.summary, rec.summary);
        EXPECT_EQ(p.screening, rec.screening);
        EXPECT_EQ(p.drift, rec.drift);
    }
}

TEST(SessionDeviations, SkipsScreenedLines) {
    SessionEngine e(config());
    weld_line(e, session_pass(*e.calibration(), 0));
    auto bad = session_pass(*e.calibration(), 1);
    bad.ctwd_mm = -4.0;
    weld_line(e, bad);
    EXPECT_TRUE(e.lines()[1].summary.excluded);
    const std::vector<SessionLog> logs{e.log()};
    std::vector<std::string> skipped;
    const auto devs = session_deviations(logs, &skipped);
    EXPECT_EQ(devs.size(), 1u);
    ASSERT_EQ(skipped.size(), 1u);
    EXPECT_NE(skipped[0].find("ExcludedNegativeCtwd"), std::string::npos);
    EXPECT_EQ(devs[0].meta.participant, "p01");
    EXPECT_EQ(devs[0].meta.segment, Segment::Ctwd);
}
