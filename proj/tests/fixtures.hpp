#pragma once

// Shared synthetic inputs for the unit tests and the acceptance run.

#include <cmath>
#include <random>
#include <vector>

#include "weldar/weldar.hpp"

namespace weldar::testing {

/// Rodrigues' formula, independent of Eigen's quaternion code.
inline Vec3 rotate_rodrigues(const Vec3& axis_in, double angle, const Vec3& v) {
    const Vec3 k = axis_in.normalized();
    return v * std::cos(angle) + k.cross(v) * std::sin(angle) + k * k.dot(v) * (1.0 - std::cos(angle));
}

inline Quat quat_from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 k = axis.normalized();
    return Quat(std::cos(angle / 2), k.x() * std::sin(angle / 2), k.y() * std::sin(angle / 2),
                k.z() * std::sin(angle / 2));
}

inline PoseFrame frame_at(double t, std::int64_t idx, const Vec3& pos, const Quat& q = Quat::Identity()) {
    PoseFrame f;
    f.timestamp = t;
    f.frame_index = idx;
    f.position = pos;
    f.orientation = q;
    return f;
}

/// A valid sample with every parameter inside the default ranges.
inline SkillSample nominal_sample(double t, std::int64_t idx) {
    SkillSample s;
    s.timestamp = t;
    s.frame_index = idx;
    s.ctwd_mm = 10.0;
    s.travel_angle_deg = 0.0;
    s.work_angle_deg = 85.0;
    s.lateral_tilt_deg = 5.0;
    s.speed_ipm = 20.0;
    s.raw_speed_ipm = 20.0;
    s.valid = true;
    return s;
}

inline std::vector<SkillSample> nominal_line(std::size_t n, double rate = kNominalFrameRate) {
    std::vector<SkillSample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(nominal_sample(static_cast<double>(i) / rate, static_cast<std::int64_t>(i)));
    return out;
}

/// A calibration whose grid is rotated and offset away from the world axes.
inline CalibrationState tilted_calibration() {
    const Quat q = quat_from_axis_angle(Vec3(0.3, -0.5, 0.8), 0.7);
    return CalibrationState::from_anchor(Pose{Vec3(0.4, -0.2, 0.9), q}, RigidOffset{Vec3(0.01, -0.02, -0.12), Quat::Identity()},
                                         0.03);
}

/// Short synthetic pass for the `n`-th line of a session. `varied` spreads
/// the targets so lines differ from each other; otherwise the pass is ideal.
inline TrajectorySpec session_pass(const CalibrationState& calib, std::size_t n, bool varied = true,
                                   double length_in = 1.0) {
    TrajectorySpec s;
    s.line = default_line(calib, length_in * kMetersPerInch);
    s.start_time = 5.0 * static_cast<double>(n);
    s.first_frame_index = static_cast<std::int64_t>(n) * 1000;
    s.seed = 100 + n;
    if (varied) {
        s.jitter = {0.002, 0.3};
        s.ctwd_mm = 7.0 + static_cast<double>(n % 6) * 1.5;
        s.travel_angle_deg = -8.0 + static_cast<double>(n % 7) * 3.0;
        s.work_angle_deg = 84.0 - static_cast<double>(n % 4) * 5.0;
        s.speed_ipm = 15.0 + static_cast<double>(n % 6) * 2.0;
    } else {
        s.travel_angle_deg = 5.0;
        s.work_angle_deg = 85.0;
    }
    return s;
}

/// Streams one pass through the engine as a complete line.
inline const LineRecord& weld_line(SessionEngine& e, const TrajectorySpec& spec) {
    e.start_line(spec.line);
    for (const auto& f : gen_pass(spec, *e.calibration()).frames) e.push_frame(f);
    return e.end_line();
}

/// Runs lines until the lesson completes.
inline SessionEngine run_session(SessionConfig cfg, bool varied = true) {
    if (!cfg.calibration) cfg.calibration = bench_calibration();
    SessionEngine e(cfg);
    for (std::size_t n = 0; !e.lesson().complete; ++n) weld_line(e, session_pass(*e.calibration(), n, varied));
    return e;
}

/// Per-participant segment values shipped with the tests.
inline std::vector<SegmentRow> load_reference_segments() {
    return parse_segment_rows(read_text_file(std::string(WELDAR_TEST_DATA_DIR) + "/reference_segments.csv"));
}

/// Reference per-(sequence, condition) segment means.
inline const std::array<SegmentValues, 4> kReferenceMeans = {{
    {0.952, 0.769, 0.294, 0.173, -0.319, -0.429, -0.351, -0.286},
    {-0.260, -0.204, -0.238, -0.288, -0.260, -0.242, -0.276, -0.296},
    {-0.010, 0.058, -0.033, -0.225, -0.479, -0.504, -0.513, -0.355},
    {0.991, 0.651, 0.334, 0.343, 0.382, 0.456, 0.185, 0.362},
}};

}  // namespace weldar::testing
