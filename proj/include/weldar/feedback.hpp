#pragma once

// Range classification, debounced feedback events and per-line summaries.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weldar/pose_model.hpp"
#include "weldar/skill_extractor.hpp"

namespace weldar {

enum class RangeState { Within, Below, Above };

enum class Hint { Ok, TooFar, TooClose, TooFast, TooSlow, TiltLeft, TiltRight, TiltForward, TiltBackward };

constexpr std::string_view to_string(RangeState s) {
    switch (s) {
        case RangeState::Within: return "within";
        case RangeState::Below: return "below";
        case RangeState::Above: return "above";
    }
    return "?";
}

constexpr std::string_view to_string(Hint h) {
    switch (h) {
        case Hint::Ok: return "ok";
        case Hint::TooFar: return "too_far";
        case Hint::TooClose: return "too_close";
        case Hint::TooFast: return "too_fast";
        case Hint::TooSlow: return "too_slow";
        case Hint::TiltLeft: return "tilt_left";
        case Hint::TiltRight: return "tilt_right";
        case Hint::TiltForward: return "tilt_forward";
        case Hint::TiltBackward: return "tilt_backward";
    }
    return "?";
}

/// Overlay text shown to the welder for a hint.
constexpr std::string_view hint_label(Hint h) {
    switch (h) {
        case Hint::Ok: return "";
        case Hint::TooFar: return "Too far from table";
        case Hint::TooClose: return "Too close";
        case Hint::TooFast: return "Too fast";
        case Hint::TooSlow: return "Too slow";
        case Hint::TiltLeft: return "Tilt left";
        case Hint::TiltRight: return "Tilt right";
        case Hint::TiltForward: return "Tilt forward";
        case Hint::TiltBackward: return "Tilt backward";
    }
    return "";
}

/// Closed intervals: both bounds count as Within.
constexpr RangeState classify(double value, const Range& range) {
    if (value < range.lo) return RangeState::Below;
    if (value > range.hi) return RangeState::Above;
    return RangeState::Within;
}

/// Value of a parameter for a sample, or nothing if it cannot be judged
/// (invalid frame, drift, speed still warming up).
inline std::optional<double> usable_value(const SkillSample& s, Parameter p) {
    if (!s.valid || s.drift_flag) return std::nullopt;
    switch (p) {
        case Parameter::Ctwd: return s.ctwd_mm;
        case Parameter::TravelAngle: return s.travel_angle_deg;
        case Parameter::WorkAngle: return s.work_angle_deg;
        case Parameter::Speed: return s.speed_ipm;
    }
    return std::nullopt;
}

// The side vector points to the welder's left when looking along travel with
// the normal up, so a positive lateral tilt is corrected by tilting right.
inline Hint hint_for(Parameter p, RangeState state, const SkillSample& s) {
    if (state == RangeState::Within) return Hint::Ok;
    const bool above = state == RangeState::Above;
    switch (p) {
        case Parameter::Ctwd: return above ? Hint::TooFar : Hint::TooClose;
        case Parameter::Speed: return above ? Hint::TooFast : Hint::TooSlow;
        case Parameter::TravelAngle: return above ? Hint::TiltBackward : Hint::TiltForward;
        case Parameter::WorkAngle: return s.lateral_tilt_deg > 0.0 ? Hint::TiltRight : Hint::TiltLeft;
    }
    return Hint::Ok;
}

struct FeedbackEvent {
    Parameter parameter = Parameter::Ctwd;
    RangeState state = RangeState::Within;
    Hint hint = Hint::Ok;
    double onset = 0.0;
    std::optional<double> offset;

    bool operator==(const FeedbackEvent&) const = default;
};

/// Which parameters surface feedback.
class ParameterSet {
public:
    constexpr ParameterSet() = default;
    constexpr ParameterSet(std::initializer_list<Parameter> ps) {
        for (auto p : ps) bits_[index_of(p)] = true;
    }
    static constexpr ParameterSet all() {
        return {Parameter::Ctwd, Parameter::TravelAngle, Parameter::WorkAngle, Parameter::Speed};
    }
    static constexpr ParameterSet none() { return {}; }

    constexpr bool contains(Parameter p) const { return bits_[index_of(p)]; }
    constexpr bool empty() const { return !(bits_[0] || bits_[1] || bits_[2] || bits_[3]); }
    std::vector<Parameter> list() const {
        std::vector<Parameter> out;
        for (auto p : kAllParameters)
            if (contains(p)) out.push_back(p);
        return out;
    }
    constexpr bool operator==(const ParameterSet&) const = default;

private:
    std::array<bool, 4> bits_{};
};

inline constexpr int kDefaultDebounceFrames = 5;

/// Debounce automaton. A state change is surfaced once the new state has
/// been seen on `debounce_frames` consecutive usable frames; onset is the
/// timestamp of the frame that completes the run. Unusable frames leave
/// both the current state and the pending run untouched.
class FeedbackTracker {
public:
    FeedbackTracker(TargetRanges ranges, ParameterSet tracked, int debounce_frames = kDefaultDebounceFrames)
        : ranges_(ranges), tracked_(tracked), debounce_(debounce_frames < 1 ? 1 : debounce_frames) {}

    /// Returns events opened by this sample.
    std::vector<FeedbackEvent> push(const SkillSample& s) {
        std::vector<FeedbackEvent> opened;
        last_time_ = s.timestamp;
        for (auto p : kAllParameters) {
            if (!tracked_.contains(p)) continue;
            const auto value = usable_value(s, p);
            if (!value) continue;
            const RangeState st = classify(*value, ranges_.of(p));
            const Hint hint = hint_for(p, st, s);
            Track& tr = tracks_[index_of(p)];
            if (!tr.open) {
                opened.push_back(open(p, st, hint, s.timestamp));
                continue;
            }
            const FeedbackEvent& cur = events_[*tr.open];
            if (cur.state == st && cur.hint == hint) {
                tr.pending_count = 0;
                continue;
            }
            if (tr.pending_count > 0 && tr.pending_state == st && tr.pending_hint == hint) {
                ++tr.pending_count;
            } else {
                tr.pending_state = st;
                tr.pending_hint = hint;
                tr.pending_count = 1;
            }
            if (tr.pending_count >= debounce_) {
                events_[*tr.open].offset = s.timestamp;
                opened.push_back(open(p, st, hint, s.timestamp));
            }
        }
        return opened;
    }

    /// Closes open events at the last seen timestamp and returns the stream.
    std::vector<FeedbackEvent> finish() {
        for (auto& tr : tracks_) {
            if (tr.open) events_[*tr.open].offset = last_time_.value_or(events_[*tr.open].onset);
            tr = Track{};
        }
        return std::move(events_);
    }

    const std::vector<FeedbackEvent>& events() const { return events_; }

private:
    struct Track {
        std::optional<std::size_t> open;
        RangeState pending_state = RangeState::Within;
        Hint pending_hint = Hint::Ok;
        int pending_count = 0;
    };

    FeedbackEvent open(Parameter p, RangeState st, Hint hint, double t) {
        Track& tr = tracks_[index_of(p)];
        tr.open = events_.size();
        tr.pending_count = 0;
        events_.push_back(FeedbackEvent{p, st, hint, t, std::nullopt});
        return events_.back();
    }

    TargetRanges ranges_;
    ParameterSet tracked_;
    int debounce_;
    std::array<Track, 4> tracks_{};
    std::vector<FeedbackEvent> events_;
    std::optional<double> last_time_;
};

inline std::vector<FeedbackEvent> feedback_stream(std::span<const SkillSample> samples,
                                                  const TargetRanges& ranges,
                                                  int debounce_frames = kDefaultDebounceFrames,
                                                  ParameterSet tracked = ParameterSet::all()) {
    FeedbackTracker tracker(ranges, tracked, debounce_frames);
    for (const auto& s : samples) tracker.push(s);
    return tracker.finish();
}

// --- line summaries ---------------------------------------------------------

struct ParameterSummary {
    double pct_within = 0.0;
    double pct_above = 0.0;
    double pct_below = 0.0;
    std::size_t frame_count = 0;

    bool operator==(const ParameterSummary&) const = default;
};

struct LineSummary {
    std::array<ParameterSummary, 4> parameters{};
    double smoothness_ipm2 = 0.0;  // population variance of speed
    double accuracy_mm = 0.0;      // mean lateral tip deviation from the line
    std::size_t valid_frame_count = 0;
    bool excluded = false;
    std::string exclusion_reason;

    const ParameterSummary& of(Parameter p) const { return parameters[index_of(p)]; }
    bool operator==(const LineSummary&) const = default;
};

/// Lateral offset of a grid point from the line, in meters (signed).
inline double lateral_offset(const GridCoords& tip, const WeldLineSpec& line, const CalibrationState& calib) {
    const GridCoords start = world_to_grid(line.start_point, calib);
    const Vec2 dir = travel_direction_uv(calib, line.direction);
    const Vec2 rel(tip.u - start.u, tip.v - start.v);
    return dir.x() * rel.y() - dir.y() * rel.x();
}

inline LineSummary summarize_line(std::span<const SkillSample> samples, const TargetRanges& ranges,
                                  const WeldLineSpec& line, const CalibrationState& calib) {
    LineSummary out;
    std::array<std::array<std::size_t, 3>, 4> counts{};  // within, above, below
    double lateral_sum = 0.0;
    std::vector<double> speeds;

    for (const auto& s : samples) {
        if (!s.valid || s.drift_flag) continue;
        ++out.valid_frame_count;
        lateral_sum += std::abs(lateral_offset(s.tip, line, calib));
        for (auto p : kAllParameters) {
            const auto v = usable_value(s, p);
            if (!v) continue;
            switch (classify(*v, ranges.of(p))) {
                case RangeState::Within: ++counts[index_of(p)][0]; break;
                case RangeState::Above: ++counts[index_of(p)][1]; break;
                case RangeState::Below: ++counts[index_of(p)][2]; break;
            }
        }
        if (s.speed_ipm) speeds.push_back(*s.speed_ipm);
    }

    if (out.valid_frame_count == 0) {
        out.excluded = true;
        out.exclusion_reason = "EmptyLineError: no valid frames";
        return out;
    }

    for (auto p : kAllParameters) {
        const auto& c = counts[index_of(p)];
        auto& ps = out.parameters[index_of(p)];
        ps.frame_count = c[0] + c[1] + c[2];
        if (ps.frame_count == 0) continue;
        const double n = static_cast<double>(ps.frame_count);
        ps.pct_within = 100.0 * static_cast<double>(c[0]) / n;
        ps.pct_above = 100.0 * static_cast<double>(c[1]) / n;
        ps.pct_below = 100.0 * static_cast<double>(c[2]) / n;
    }

    if (!speeds.empty()) {
        double mean = 0.0;
        for (double v : speeds) mean += v;
        mean /= static_cast<double>(speeds.size());
        double var = 0.0;
        for (double v : speeds) var += (v - mean) * (v - mean);
        out.smoothness_ipm2 = var / static_cast<double>(speeds.size());
    }
    out.accuracy_mm = m_to_mm(lateral_sum / static_cast<double>(out.valid_frame_count));
    return out;
}

}  // namespace weldar
