#pragma once

// Per-frame skill parameters: CTWD, travel angle, work angle, travel speed.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "weldar/kalman.hpp"
#include "weldar/pose_model.hpp"

namespace weldar {

struct SkillSample {
    double timestamp = 0.0;
    std::int64_t frame_index = 0;
    double ctwd_mm = 0.0;
    double travel_angle_deg = 0.0;  // push positive, drag negative
    double work_angle_deg = 90.0;   // 90 - |lateral tilt|, in [0, 90]
    double lateral_tilt_deg = 0.0;  // signed, positive toward +side
    std::optional<double> speed_ipm;  // windowed, absent during warm-up
    double raw_speed_ipm = 0.0;       // instantaneous filter velocity along travel
    GridCoords tip;                   // meters
    bool valid = false;
    bool drift_flag = false;

    bool operator==(const SkillSample&) const = default;
};

/// Signed height of the tip above the grid plane, in millimeters.
inline double compute_ctwd(const TorchPose& tip, const CalibrationState& calib) {
    return m_to_mm(world_to_grid(tip.tip_position, calib).h);
}

inline double compute_ctwd(const TorchPose& tip, const std::optional<CalibrationState>& calib) {
    return compute_ctwd(tip, require_calibration(calib));
}

inline constexpr double kDegenerateAxisTolerance = 1e-9;

inline double compute_travel_angle(const TorchPose& tip, const CalibrationState& calib) {
    const Vec3& a = tip.barrel_axis;
    if (std::abs(a.dot(calib.side())) >= 1.0 - kDegenerateAxisTolerance)
        throw DegenerateOrientationError("torch axis lies along the side vector; travel tilt undefined");
    double deg = rad_to_deg(std::atan2(a.dot(calib.weld_direction()), a.dot(calib.normal())));
    if (deg <= -180.0) deg = 180.0;
    return deg;
}

/// Lateral tilt of the torch away from the normal, signed toward +side.
inline double compute_lateral_tilt(const TorchPose& tip, const CalibrationState& calib) {
    const Vec3& a = tip.barrel_axis;
    if (std::abs(a.dot(calib.weld_direction())) >= 1.0 - kDegenerateAxisTolerance)
        throw DegenerateOrientationError("torch axis lies along the weld direction; work tilt undefined");
    return rad_to_deg(std::atan2(a.dot(calib.side()), a.dot(calib.normal())));
}

inline double compute_work_angle(const TorchPose& tip, const CalibrationState& calib) {
    const double phi = compute_lateral_tilt(tip, calib);
    return std::clamp(90.0 - std::abs(phi), 0.0, 90.0);
}

/// Unit travel direction expressed in grid (u, v).
inline Vec2 travel_direction_uv(const CalibrationState& calib, const std::optional<Vec3>& direction) {
    if (!direction) return Vec2::UnitX();
    const GridCoords g{direction->dot(calib.weld_direction()), direction->dot(calib.side()), 0.0};
    Vec2 uv(g.u, g.v);
    const double n = uv.norm();
    if (n < 1e-12) throw PreconditionError("travel direction is perpendicular to the grid plane");
    return uv / n;
}

inline constexpr int window_frames_for(double window_s, double rate_hz = kNominalFrameRate) {
    const int frames = static_cast<int>(std::lround(window_s * rate_hz));
    return frames < 2 ? 2 : frames;
}

/// Mean travel-direction velocity over the last `window_frames` states, in
/// IPM. Absent while fewer states than that are available.
inline std::optional<double> estimate_speed(std::span<const KalmanState> states,
                                            const CalibrationState& calib, int window_frames = 45,
                                            const std::optional<Vec3>& direction = std::nullopt) {
    if (window_frames < 2) throw PreconditionError("speed window needs at least 2 states");
    if (states.size() < static_cast<std::size_t>(window_frames)) return std::nullopt;
    const Vec2 dir = travel_direction_uv(calib, direction);
    double sum = 0.0;
    for (const auto& s : states.last(static_cast<std::size_t>(window_frames))) sum += s.velocity().dot(dir);
    return mps_to_ipm(sum / window_frames);
}

struct ExtractorConfig {
    KalmanParams kalman;
    double speed_window_s = 0.5;

    int window_frames() const { return window_frames_for(speed_window_s); }
};

/// Streaming extractor; one per weld line. Deterministic for a given input.
class SkillExtractor {
public:
    explicit SkillExtractor(CalibrationState calib, ExtractorConfig cfg = {},
                            std::optional<Vec3> travel_direction = std::nullopt)
        : calib_(std::move(calib)),
          cfg_(cfg),
          travel_dir_(travel_direction_uv(calib_, travel_direction)),
          window_(static_cast<std::size_t>(cfg_.window_frames())) {}

    SkillSample push(const PoseFrame& frame) {
        SkillSample s;
        s.timestamp = frame.timestamp;
        s.frame_index = frame.frame_index;

        TorchPose torch;
        try {
            torch = derive_torch_pose(frame, calib_);
        } catch (const DegeneratePoseError&) {
            return s;
        }
        if (last_time_ && !(frame.timestamp > *last_time_)) return s;

        const GridCoords g = world_to_grid(torch.tip_position, calib_);
        s.tip = g;
        s.ctwd_mm = m_to_mm(g.h);
        filter(Vec2(g.u, g.v), frame.timestamp);
        s.raw_speed_ipm = mps_to_ipm(kf_->velocity().dot(travel_dir_));
        if (recent_.size() >= window_) {
            double sum = 0.0;
            for (double v : recent_) sum += v;
            s.speed_ipm = mps_to_ipm(sum / static_cast<double>(recent_.size()));
        }

        try {
            s.travel_angle_deg = compute_travel_angle(torch, calib_);
            s.lateral_tilt_deg = compute_lateral_tilt(torch, calib_);
            s.work_angle_deg = std::clamp(90.0 - std::abs(s.lateral_tilt_deg), 0.0, 90.0);
            s.valid = std::isfinite(s.ctwd_mm);
        } catch (const DegenerateOrientationError&) {
            s.travel_angle_deg = 0.0;
            s.lateral_tilt_deg = 0.0;
            s.work_angle_deg = 0.0;
            s.valid = false;
        }
        return s;
    }

    const CalibrationState& calibration() const { return calib_; }
    const std::optional<KalmanState>& kalman() const { return kf_; }

private:
    void filter(const Vec2& uv, double t) {
        if (!kf_) {
            kf_ = KalmanState::at_rest(uv, cfg_.kalman);
            first_uv_ = uv;
        } else if (!velocity_initialized_) {
            kf_ = KalmanState::from_two_points(*first_uv_, uv, t - *last_time_, cfg_.kalman);
            velocity_initialized_ = true;
        } else {
            kf_ = kalman_step(*kf_, uv, t - *last_time_);
        }
        last_time_ = t;
        if (velocity_initialized_) {
            recent_.push_back(kf_->velocity().dot(travel_dir_));
            if (recent_.size() > window_) recent_.pop_front();
        }
    }

    CalibrationState calib_;
    ExtractorConfig cfg_;
    Vec2 travel_dir_;
    std::size_t window_;
    std::optional<KalmanState> kf_;
    std::optional<Vec2> first_uv_;
    std::optional<double> last_time_;
    bool velocity_initialized_ = false;
    std::deque<double> recent_;
};

inline std::vector<SkillSample> extract_samples(std::span<const PoseFrame> frames,
                                                const CalibrationState& calib,
                                                const ExtractorConfig& cfg = {},
                                                const std::optional<Vec3>& travel_direction = std::nullopt) {
    SkillExtractor ex(calib, cfg, travel_direction);
    std::vector<SkillSample> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(ex.push(f));
    return out;
}

inline std::vector<SkillSample> extract_samples(std::span<const PoseFrame> frames,
                                                const std::optional<CalibrationState>& calib,
                                                const ExtractorConfig& cfg = {}) {
    return extract_samples(frames, require_calibration(calib), cfg);
}

}  // namespace weldar
