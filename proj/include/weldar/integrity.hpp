#pragma once

// Tracking-drift detection, line screening and bootstrap drift odds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weldar/skill_extractor.hpp"

namespace weldar {

struct DriftThresholds {
    double ctwd_jump_mm = 20.0;          // per frame
    double speed_jump_ipm = 50.0;        // per frame
    double max_angular_velocity_dps = 30.0;
};

/// Contiguous run of flagged frames, as stream positions [first, last].
struct DriftEvent {
    std::size_t first = 0;
    std::size_t last = 0;

    bool operator==(const DriftEvent&) const = default;
};

struct DriftReport {
    std::vector<std::int64_t> flagged_frames;  // frame_index values
    std::vector<DriftEvent> events;
    std::size_t frame_count = 0;
    double affected_frame_fraction = 0.0;

    std::size_t drift_event_count() const { return events.size(); }
    bool operator==(const DriftReport&) const = default;
};

inline double angular_velocity_dps(const Quat& from, const Quat& to, double dt) {
    const double dot = std::min(1.0, std::abs(from.normalized().dot(to.normalized())));
    return rad_to_deg(2.0 * std::acos(dot)) / dt;
}

/// Flags a frame when CTWD or speed jumps while orientation holds still;
/// a jump explained by rotation is ordinary hand motion.
class DriftDetector {
public:
    explicit DriftDetector(DriftThresholds t = {}) : t_(t) {}

    bool push(const SkillSample& s, const Quat& orientation) {
        if (!s.valid) return false;
        bool flagged = false;
        if (has_prev_ && s.timestamp > prev_time_) {
            const double dt = s.timestamp - prev_time_;
            const bool jump = std::abs(s.ctwd_mm - prev_ctwd_) > t_.ctwd_jump_mm ||
                              std::abs(s.raw_speed_ipm - prev_speed_) > t_.speed_jump_ipm;
            flagged = jump && angular_velocity_dps(prev_orientation_, orientation, dt) < t_.max_angular_velocity_dps;
        }
        has_prev_ = true;
        prev_time_ = s.timestamp;
        prev_ctwd_ = s.ctwd_mm;
        prev_speed_ = s.raw_speed_ipm;
        prev_orientation_ = orientation;
        return flagged;
    }

private:
    DriftThresholds t_;
    bool has_prev_ = false;
    double prev_time_ = 0.0;
    double prev_ctwd_ = 0.0;
    double prev_speed_ = 0.0;
    Quat prev_orientation_ = Quat::Identity();
};

inline DriftReport build_drift_report(std::span<const SkillSample> samples) {
    DriftReport r;
    r.frame_count = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].drift_flag) continue;
        r.flagged_frames.push_back(samples[i].frame_index);
        if (!r.events.empty() && r.events.back().last + 1 == i)
            r.events.back().last = i;
        else
            r.events.push_back({i, i});
    }
    if (r.frame_count > 0)
        r.affected_frame_fraction = static_cast<double>(r.flagged_frames.size()) / static_cast<double>(r.frame_count);
    return r;
}

/// Sets drift_flag on affected samples and reports them.
inline DriftReport detect_drift(std::span<SkillSample> samples, std::span<const Quat> orientations,
                                const DriftThresholds& t = {}) {
    if (samples.size() != orientations.size())
        throw PreconditionError("sample and orientation streams must be frame-aligned");
    DriftDetector det(t);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].drift_flag = det.push(samples[i], orientations[i]);
    return build_drift_report(samples);
}

struct SessionDriftSummary {
    std::size_t line_count = 0;
    std::size_t lines_with_drift = 0;
    double line_fraction = 0.0;
};

inline SessionDriftSummary summarize_drift(std::span<const DriftReport> lines) {
    SessionDriftSummary s;
    s.line_count = lines.size();
    for (const auto& l : lines)
        if (l.drift_event_count() > 0) ++s.lines_with_drift;
    if (s.line_count > 0) s.line_fraction = static_cast<double>(s.lines_with_drift) / static_cast<double>(s.line_count);
    return s;
}

// --- screening --------------------------------------------------------------

enum class ScreeningKind { Valid, ExcludedNegativeCtwd, FlaggedExtremeInitialCtwd };

constexpr std::string_view to_string(ScreeningKind k) {
    switch (k) {
        case ScreeningKind::Valid: return "Valid";
        case ScreeningKind::ExcludedNegativeCtwd: return "ExcludedNegativeCtwd";
        case ScreeningKind::FlaggedExtremeInitialCtwd: return "FlaggedExtremeInitialCtwd";
    }
    return "?";
}

struct ScreeningVerdict {
    ScreeningKind kind = ScreeningKind::Valid;
    std::string detail;

    bool usable() const { return kind == ScreeningKind::Valid; }
    bool operator==(const ScreeningVerdict&) const = default;
};

struct ScreeningRules {
    double negative_ctwd_tolerance_mm = -1.0;
    double extreme_initial_ctwd_mm = 60.0;
    std::size_t initial_frames = 10;
};

inline ScreeningVerdict screen_line(std::span<const SkillSample> samples, const ScreeningRules& rules = {}) {
    double lowest = 0.0;
    bool any = false;
    for (const auto& s : samples) {
        if (!s.valid) continue;
        lowest = any ? std::min(lowest, s.ctwd_mm) : s.ctwd_mm;
        any = true;
    }
    if (any && lowest < rules.negative_ctwd_tolerance_mm)
        return {ScreeningKind::ExcludedNegativeCtwd, "minimum CTWD " + std::to_string(lowest) + " mm"};

    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (n == rules.initial_frames) break;
        if (!s.valid) continue;
        sum += s.ctwd_mm;
        ++n;
    }
    if (n > 0 && sum / static_cast<double>(n) > rules.extreme_initial_ctwd_mm)
        return {ScreeningKind::FlaggedExtremeInitialCtwd,
                "initial mean CTWD " + std::to_string(sum / static_cast<double>(n)) + " mm"};
    return {};
}

// --- bootstrap --------------------------------------------------------------

struct BootstrapEstimate {
    double probability = 0.0;
    double lower = 0.0;  // 95% Wilson interval on the Monte Carlo estimate
    double upper = 0.0;
    int samples = 0;
    int k = 0;
};

inline constexpr int kDefaultBootstrapSamples = 10000;

/// P(at least one drift line among k), by resampling k line outcomes with
/// replacement per draw.
inline BootstrapEstimate bootstrap_drift_probability(const std::vector<bool>& line_outcomes, int k,
                                                     int samples = kDefaultBootstrapSamples,
                                                     std::uint64_t seed = 0) {
    if (line_outcomes.empty()) throw DegenerateInputError("no line outcomes to resample");
    if (k < 1) throw PreconditionError("k must be >= 1");
    if (samples < 1) throw PreconditionError("samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, line_outcomes.size() - 1);
    int hits = 0;
    for (int b = 0; b < samples; ++b) {
        bool any = false;
        for (int j = 0; j < k; ++j) any = line_outcomes[pick(rng)] || any;
        hits += any ? 1 : 0;
    }
    BootstrapEstimate est;
    est.samples = samples;
    est.k = k;
    const double n = samples;
    const double p = hits / n;
    est.probability = p;
    const double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    est.lower = std::max(0.0, centre - half);
    est.upper = std::min(1.0, centre + half);
    return est;
}

}  // namespace weldar
