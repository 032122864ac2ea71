#include "test_util.hpp"

using namespace weldar;
using namespace weldar::testing;

namespace {

std::vector<PoseFrame> pressed_between(std::size_t n, std::size_t from, std::size_t to) {
    std::vector<PoseFrame> frames;
    for (std::size_t i = 0; i < n; ++i) {
        auto f = frame_at(i / kNominalFrameRate, static_cast<std::int64_t>(i), Vec3::Zero());
        f.trigger_down = i >= from && i <= to;
        frames.push_back(f);
    }
    return frames;
}

}  // namespace

TEST(Acoustic, SingleBurstWithinBudget) {
    SyntheticAudioSpec spec;
    spec.bursts = {{1.0, 3.0}};
    const double truth[] = {1.0};
    const auto ev = detect_onset_acoustic(synth_weld_audio(spec), AudioConfig{}, truth);
    ASSERT_EQ(ev.size(), 1u);
    ASSERT_TRUE(ev[0].detection_latency.has_value());
    EXPECT_GE(*ev[0].detection_latency, 0.0);
    EXPECT_LE(*ev[0].detection_latency, 0.21);
    ASSERT_TRUE(ev[0].offset.has_value());
    EXPECT_NEAR(*ev[0].offset, 4.0, 0.05);
}

TEST(Acoustic, SilenceHasNoEvents) {
    AudioSignal sig;
    sig.samples.assign(48000, 0.0f);
    EXPECT_TRUE(detect_onset_acoustic(sig, AudioConfig{}).empty());
}

TEST(Acoustic, TwoBurstsTwoEvents) {
    SyntheticAudioSpec spec;
    spec.bursts = {{0.5, 1.0}, {3.0, 1.5}};
    for (int buf : {128, 1024}) {
        AudioConfig cfg;
        cfg.buffer_frames = buf;
        const auto ev = detect_onset_acoustic(synth_weld_audio(spec), cfg);
        ASSERT_EQ(ev.size(), 2u) << buf;
        EXPECT_LT(ev[0].onset, ev[1].onset);
    }
}

TEST(Acoustic, BufferLevelsMatchDirectRms) {
    SyntheticAudioSpec spec;
    spec.duration_s = 0.5;
    spec.bursts = {{0.1, 0.2}};
    const auto sig = synth_weld_audio(spec);
    const auto levels = buffer_levels(sig, 128);
    ASSERT_EQ(levels.size(), sig.samples.size() / 128);
    for (std::size_t b = 0; b < levels.size(); b += 7) {
        long double sq = 0;
        for (std::size_t i = b * 128; i < (b + 1) * 128; ++i) sq += static_cast<long double>(sig.samples[i]) * sig.samples[i];
        EXPECT_NEAR(levels[b].level, std::sqrt(static_cast<double>(sq / 128)), 1e-9);
        EXPECT_NEAR(levels[b].timestamp, (b + 1) * 128 / 48000.0, 1e-12);
    }
}

TEST(Acoustic, ConfigValidation) {
    AudioConfig cfg;
    cfg.buffer_frames = 256;
    EXPECT_THROW(cfg.validate(), PreconditionError);
    cfg.buffer_frames = 1024;
    EXPECT_NO_THROW(cfg.validate());
    cfg.level_threshold = 0.0;
    EXPECT_THROW(cfg.validate(), PreconditionError);
}

TEST(Acoustic, LatencyCheckMeetsBudget) {
    const auto c = acoustic_latency_check();
    EXPECT_EQ(c.events.size(), c.bursts);
    EXPECT_LE(c.max_latency_s, 0.21);
}

TEST(Mechanical, SinglePress) {
    const auto frames = pressed_between(200, 10, 100);
    const auto ev = detect_mechanical(frames);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].onset, frames[10].timestamp);
    EXPECT_EQ(ev[0].offset, frames[100].timestamp);
    EXPECT_EQ(window_for(frames, ev[0]), (AnalysisWindow{10, 101}));
}

TEST(Mechanical, NeverPressed) {
    EXPECT_TRUE(detect_mechanical(pressed_between(50, 60, 70)).empty());
}

TEST(Mechanical, PressReleasePress) {
    auto frames = pressed_between(100, 5, 20);
    for (std::size_t i = 50; i < 100; ++i) frames[i].trigger_down = true;
    const auto ev = detect_mechanical(frames);
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[1].onset, frames[50].timestamp);
    EXPECT_FALSE(ev[1].offset.has_value());
    EXPECT_EQ(window_for(frames, ev[1]), (AnalysisWindow{50, 100}));
}

TEST(Alignment, ShiftsByTwentyFrames) {
    EXPECT_EQ(align_audio_log(AnalysisWindow{200, 500}), (AnalysisWindow{180, 480}));
    EXPECT_EQ(align_audio_log(AnalysisWindow{200, 500}, 0), (AnalysisWindow{200, 500}));
    EXPECT_THROW(align_audio_log(AnalysisWindow{10, 50}), InsufficientHistoryError);
    EXPECT_THROW(align_audio_log(AnalysisWindow{10, 50}, -1), PreconditionError);
}

TEST(Alignment, FrameSpanView) {
    const auto frames = pressed_between(300, 0, 0);
    const auto view = align_audio_log(std::span<const PoseFrame>(frames), AnalysisWindow{200, 260});
    ASSERT_EQ(view.size(), 60u);
    EXPECT_EQ(view.front().frame_index, 180);
    EXPECT_EQ(view.back().frame_index, 239);
    EXPECT_THROW(align_audio_log(std::span<const PoseFrame>(frames), AnalysisWindow{200, 400}), PreconditionError);
}

TEST(Alignment, FrameLevelsFeedGate) {
    std::vector<PoseFrame> frames;
    for (int i = 0; i < 180; ++i) {
        auto f = frame_at(i / 90.0, i, Vec3::Zero());
        f.audio_level = (i >= 45 && i < 135) ? 0.6 : 0.01;
        frames.push_back(f);
    }
    const auto ev = detect_onset_levels(frame_levels(frames), AudioConfig{});
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].onset, frames[45].timestamp);
    EXPECT_EQ(ev[0].offset, frames[135].timestamp);
    EXPECT_EQ(window_for(frames, ev[0]), (AnalysisWindow{45, 135}));
}
