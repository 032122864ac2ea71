#pragma once

// Weld onset/offset from the torch trigger lever or from arc sound, and the
// frame shift that lines audio-triggered windows up with motion.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weldar/pose_model.hpp"

namespace weldar {

enum class TriggerKind { Mechanical, Acoustic };

struct TriggerEvent {
    TriggerKind kind = TriggerKind::Mechanical;
    double onset = 0.0;
    std::optional<double> offset;
    std::optional<double> detection_latency;  // acoustic only, needs ground truth

    bool operator==(const TriggerEvent&) const = default;
};

struct AudioConfig {
    int buffer_frames = 128;
    double sample_rate = 48000.0;
    double level_threshold = 0.3;
    double hysteresis = 0.05;
    double release_hold_s = 0.2;
    std::string mic_distance_note;

    double buffer_duration() const { return buffer_frames / sample_rate; }

    void validate() const {
        if (buffer_frames != 128 && buffer_frames != 1024)
            throw PreconditionError("buffer_frames must be 128 or 1024");
        if (!(level_threshold > 0.0 && level_threshold < 1.0))
            throw PreconditionError("level_threshold must lie in (0, 1)");
        if (!(sample_rate > 0.0)) throw PreconditionError("sample_rate must be positive");
        if (hysteresis < 0.0 || hysteresis >= level_threshold)
            throw PreconditionError("hysteresis must lie in [0, level_threshold)");
        if (release_hold_s < 0.0) throw PreconditionError("release_hold_s must be >= 0");
    }
};

/// A level reading: RMS in [0, 1] available at `timestamp`.
struct LevelSample {
    double timestamp = 0.0;
    double level = 0.0;
};

/// Mono PCM clip; sample i is at start_time + i / sample_rate.
struct AudioSignal {
    double start_time = 0.0;
    double sample_rate = 48000.0;
    std::vector<float> samples;
};

/// Threshold gate with hysteresis and a release hold.
class AcousticGate {
public:
    explicit AcousticGate(AudioConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    /// Returns a finished event when one closes at this reading.
    std::optional<TriggerEvent> push(const LevelSample& s) {
        if (!active_) {
            if (s.level > cfg_.level_threshold) {
                active_ = TriggerEvent{TriggerKind::Acoustic, s.timestamp, std::nullopt, std::nullopt};
                quiet_since_.reset();
            }
            return std::nullopt;
        }
        if (s.level < cfg_.level_threshold - cfg_.hysteresis) {
            if (!quiet_since_) quiet_since_ = s.timestamp;
            if (s.timestamp - *quiet_since_ >= cfg_.release_hold_s - 1e-12) {
                TriggerEvent done = *active_;
                done.offset = *quiet_since_;
                active_.reset();
                quiet_since_.reset();
                return done;
            }
        } else {
            quiet_since_.reset();
        }
        return std::nullopt;
    }

    /// Event still open at end of stream, if any.
    const std::optional<TriggerEvent>& active() const { return active_; }

private:
    AudioConfig cfg_;
    std::optional<TriggerEvent> active_;
    std::optional<double> quiet_since_;
};

/// RMS per consecutive buffer, stamped at the buffer's end (when it becomes
/// available to the detector).
inline std::vector<LevelSample> buffer_levels(const AudioSignal& signal, int buffer_frames) {
    std::vector<LevelSample> out;
    const std::size_t n = static_cast<std::size_t>(buffer_frames);
    for (std::size_t start = 0; start + n <= signal.samples.size(); start += n) {
        double sq = 0.0;
        for (std::size_t i = start; i < start + n; ++i) sq += double(signal.samples[i]) * signal.samples[i];
        out.push_back({signal.start_time + static_cast<double>(start + n) / signal.sample_rate,
                       std::sqrt(sq / static_cast<double>(n))});
    }
    return out;
}

namespace detail {
inline void attach_latency(std::vector<TriggerEvent>& events, std::span<const double> true_onsets) {
    for (auto& e : events) {
        std::optional<double> best;
        for (double t : true_onsets)
            if (t <= e.onset && (!best || t > *best)) best = t;
        if (best) e.detection_latency = e.onset - *best;
    }
}
}  // namespace detail

/// Sound-triggered events over a level stream (e.g. the per-frame
/// audio_level carried in PoseFrames).
inline std::vector<TriggerEvent> detect_onset_levels(std::span<const LevelSample> levels, const AudioConfig& cfg,
                                                     std::span<const double> true_onsets = {}) {
    AcousticGate gate(cfg);
    std::vector<TriggerEvent> out;
    for (const auto& s : levels)
        if (auto e = gate.push(s)) out.push_back(*e);
    if (gate.active()) out.push_back(*gate.active());
    detail::attach_latency(out, true_onsets);
    return out;
}

inline std::vector<TriggerEvent> detect_onset_acoustic(const AudioSignal& signal, const AudioConfig& cfg,
                                                       std::span<const double> true_onsets = {}) {
    cfg.validate();
    const auto levels = buffer_levels(signal, cfg.buffer_frames);
    return detect_onset_levels(levels, cfg, true_onsets);
}

inline std::vector<LevelSample> frame_levels(std::span<const PoseFrame> frames) {
    std::vector<LevelSample> out;
    for (const auto& f : frames)
        if (f.audio_level) out.push_back({f.timestamp, *f.audio_level});
    return out;
}

/// One event per press, from the first to the last pressed frame. A press
/// still held at the end of the stream has no offset.
inline std::vector<TriggerEvent> detect_mechanical(std::span<const PoseFrame> frames) {
    std::vector<TriggerEvent> out;
    bool down = false;
    double last_down = 0.0;
    for (const auto& f : frames) {
        if (f.trigger_down && !down) {
            out.push_back(TriggerEvent{TriggerKind::Mechanical, f.timestamp, std::nullopt, std::nullopt});
        } else if (!f.trigger_down && down) {
            out.back().offset = last_down;
        }
        if (f.trigger_down) last_down = f.timestamp;
        down = f.trigger_down;
    }
    return out;
}

/// Half-open range of frame indices [begin, end) fed to motion analysis.
struct AnalysisWindow {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const AnalysisWindow&) const = default;
};

inline constexpr int kDefaultAudioShiftFrames = 20;

/// Moves an acoustically triggered window earlier by `shift_frames`. Frames
/// themselves are not touched.
inline AnalysisWindow align_audio_log(AnalysisWindow window, int shift_frames = kDefaultAudioShiftFrames) {
    if (shift_frames < 0) throw PreconditionError("shift_frames must be >= 0");
    const auto shift = static_cast<std::size_t>(shift_frames);
    if (window.begin < shift)
        throw InsufficientHistoryError("only " + std::to_string(window.begin) +
                                       " frames precede the onset; need " + std::to_string(shift));
    return AnalysisWindow{window.begin - shift, window.end >= shift ? window.end - shift : 0};
}

inline std::span<const PoseFrame> align_audio_log(std::span<const PoseFrame> frames, AnalysisWindow window,
                                                  int shift_frames = kDefaultAudioShiftFrames) {
    if (window.end > frames.size() || window.begin > window.end)
        throw PreconditionError("analysis window lies outside the frame stream");
    const AnalysisWindow w = align_audio_log(window, shift_frames);
    return frames.subspan(w.begin, w.size());
}

/// Index of the first frame at or after `t`, or frames.size().
inline std::size_t frame_at_or_after(std::span<const PoseFrame> frames, double t) {
    std::size_t i = 0;
    while (i < frames.size() && frames[i].timestamp < t) ++i;
    return i;
}

/// Frame window covered by a trigger event. A mechanical offset is the last
/// pressed frame (inclusive); an acoustic offset is the first quiet reading.
inline AnalysisWindow window_for(std::span<const PoseFrame> frames, const TriggerEvent& e) {
    const std::size_t begin = frame_at_or_after(frames, e.onset);
    std::size_t end = frames.size();
    if (e.offset) {
        end = frame_at_or_after(frames, *e.offset);
        if (e.kind == TriggerKind::Mechanical && end < frames.size() && frames[end].timestamp == *e.offset) ++end;
    }
    return AnalysisWindow{begin, end < begin ? begin : end};
}

}  // namespace weldar
