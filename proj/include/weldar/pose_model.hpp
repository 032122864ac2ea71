#pragma once

// Coordinate frames, poses, calibration and target ranges.
//
// Everything here is SI (meters, seconds, radians) except TargetRanges,
// which is expressed in the display units welders use (mm, deg, IPM).

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <string_view>

#include "weldar/errors.hpp"

namespace weldar {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMetersPerInch = 0.0254;
inline constexpr double kNominalFrameRate = 90.0;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }
constexpr double m_to_mm(double m) { return m * 1000.0; }
constexpr double mm_to_m(double mm) { return mm / 1000.0; }
constexpr double mps_to_ipm(double mps) { return mps / kMetersPerInch * 60.0; }
constexpr double ipm_to_mps(double ipm) { return ipm * kMetersPerInch / 60.0; }

struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
};

/// One tracked controller sample (nominally 90 Hz).
struct PoseFrame {
    double timestamp = 0.0;
    std::int64_t frame_index = 0;
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    bool trigger_down = false;
    std::optional<double> audio_level;
    std::optional<double> tracking_confidence;

    bool has_unit_orientation(double tol = 1e-6) const {
        return std::abs(orientation.norm() - 1.0) <= tol;
    }
};

/// Rigid transform from the controller pose to the torch contact tip.
struct RigidOffset {
    Vec3 translation = Vec3::Zero();
    Quat rotation = Quat::Identity();
};

/// Contact-tip position plus the barrel axis, which points tip -> body.
struct TorchPose {
    Vec3 tip_position = Vec3::Zero();
    Vec3 barrel_axis = Vec3::UnitZ();
};

struct GridPlane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
};

/// Position of a point in the weld grid: u along the weld direction, v along
/// the side vector (normal x weld_direction), h along the plane normal.
struct GridCoords {
    double u = 0.0;
    double v = 0.0;
    double h = 0.0;

    bool operator==(const GridCoords&) const = default;
};

class CalibrationState {
public:
    static constexpr double kTolerance = 1e-9;

    CalibrationState(Pose anchor, GridPlane plane, Vec3 weld_direction, RigidOffset tip_offset)
        : anchor_(std::move(anchor)),
          plane_(std::move(plane)),
          weld_direction_(std::move(weld_direction)),
          tip_offset_(std::move(tip_offset)) {
        validate();
    }

    /// Builds the grid from the station pose: the normal is the anchor's
    /// local +z, the weld direction its local +x (re-orthogonalized), and the
    /// origin is the anchor position dropped `bench_drop_m` along -normal.
    static CalibrationState from_anchor(const Pose& anchor, RigidOffset tip_offset = {},
                                        double bench_drop_m = 0.0) {
        const Quat q = anchor.orientation.normalized();
        const Vec3 normal = (q * Vec3::UnitZ()).normalized();
        Vec3 dir = q * Vec3::UnitX();
        dir = (dir - dir.dot(normal) * normal).normalized();
        GridPlane plane{anchor.position - bench_drop_m * normal, normal};
        return CalibrationState(anchor, plane, dir, std::move(tip_offset));
    }

    const Pose& anchor_pose() const { return anchor_; }
    const GridPlane& grid_plane() const { return plane_; }
    const Vec3& weld_direction() const { return weld_direction_; }
    const Vec3& normal() const { return plane_.normal; }
    Vec3 side() const { return plane_.normal.cross(weld_direction_); }
    const RigidOffset& tip_offset() const { return tip_offset_; }

    CalibrationState with_tip_translation(const Vec3& translation) const {
        RigidOffset off = tip_offset_;
        off.translation = translation;
        return CalibrationState(anchor_, plane_, weld_direction_, off);
    }

    /// Grid axes as columns (weld_direction, side, normal).
    Eigen::Matrix3d grid_axes() const {
        Eigen::Matrix3d m;
        m.col(0) = weld_direction_;
        m.col(1) = side();
        m.col(2) = plane_.normal;
        return m;
    }

private:
    void validate() const {
        if (std::abs(plane_.normal.norm() - 1.0) > kTolerance)
            throw InvalidCalibrationError("grid_plane.normal is not unit length");
        if (std::abs(weld_direction_.norm() - 1.0) > kTolerance)
            throw InvalidCalibrationError("weld_direction is not unit length");
        if (std::abs(weld_direction_.dot(plane_.normal)) > kTolerance)
            throw InvalidCalibrationError("weld_direction does not lie in grid_plane");
        if (std::abs(tip_offset_.rotation.norm() - 1.0) > 1e-6)
            throw InvalidCalibrationError("tip_offset.rotation is not a unit quaternion");
    }

    Pose anchor_;
    GridPlane plane_;
    Vec3 weld_direction_;
    RigidOffset tip_offset_;
};

inline const CalibrationState& require_calibration(const std::optional<CalibrationState>& calib) {
    if (!calib) throw UncalibratedError("no calibration has been established");
    return *calib;
}

/// A straight practice line on the coupon.
struct WeldLineSpec {
    Vec3 start_point = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();
    double length_m = 5.0 * kMetersPerInch;

    Vec3 end_point() const { return start_point + length_m * direction; }

    void validate(const CalibrationState& calib) const {
        if (!(length_m > 0.0)) throw PreconditionError("weld line length must be positive");
        if (std::abs(direction.norm() - 1.0) > 1e-9)
            throw PreconditionError("weld line direction is not unit length");
        if (std::abs(direction.dot(calib.normal())) > 1e-9)
            throw PreconditionError("weld line direction does not lie in the grid plane");
    }
};

/// Default line along the calibrated weld direction through the grid origin.
inline WeldLineSpec default_line(const CalibrationState& calib, double length_m = 5.0 * kMetersPerInch) {
    return WeldLineSpec{calib.grid_plane().point, calib.weld_direction(), length_m};
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool valid() const { return lo < hi; }
    bool operator==(const Range&) const = default;
};

enum class Parameter { Ctwd, TravelAngle, WorkAngle, Speed };

inline constexpr std::array<Parameter, 4> kAllParameters = {
    Parameter::Ctwd, Parameter::TravelAngle, Parameter::WorkAngle, Parameter::Speed};

constexpr std::size_t index_of(Parameter p) { return static_cast<std::size_t>(p); }

constexpr std::string_view to_string(Parameter p) {
    switch (p) {
        case Parameter::Ctwd: return "ctwd";
        case Parameter::TravelAngle: return "travel_angle";
        case Parameter::WorkAngle: return "work_angle";
        case Parameter::Speed: return "speed";
    }
    return "?";
}

inline std::optional<Parameter> parameter_from_string(std::string_view s) {
    for (auto p : kAllParameters)
        if (to_string(p) == s) return p;
    return std::nullopt;
}

/// Acceptable ranges, in display units.
struct TargetRanges {
    Range ctwd_mm{6.0, 15.0};
    Range travel_angle_deg{-10.0, 10.0};
    Range work_angle_deg{75.0, 90.0};
    Range speed_ipm{15.0, 25.0};

    const Range& of(Parameter p) const {
        switch (p) {
            case Parameter::Ctwd: return ctwd_mm;
            case Parameter::TravelAngle: return travel_angle_deg;
            case Parameter::WorkAngle: return work_angle_deg;
            case Parameter::Speed: return speed_ipm;
        }
        return ctwd_mm;
    }
    Range& of(Parameter p) { return const_cast<Range&>(std::as_const(*this).of(p)); }

    void validate() const {
        for (auto p : kAllParameters)
            if (!of(p).valid())
                throw PreconditionError("target range for " + std::string(to_string(p)) +
                                        " must satisfy lo < hi");
    }

    bool operator==(const TargetRanges&) const = default;
};

// --- operations -------------------------------------------------------------

inline TorchPose derive_torch_pose(const PoseFrame& frame, const CalibrationState& calib) {
    const double n = frame.orientation.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-3) {
        std::ostringstream os;
        os << "frame " << frame.frame_index << " has quaternion norm " << n;
        throw DegeneratePoseError(os.str());
    }
    const Quat q = frame.orientation.normalized();
    const RigidOffset& off = calib.tip_offset();
    TorchPose pose;
    pose.tip_position = frame.position + q * off.translation;
    pose.barrel_axis = (q * (off.rotation * Vec3::UnitZ())).normalized();
    return pose;
}

inline TorchPose derive_torch_pose(const PoseFrame& frame, const std::optional<CalibrationState>& calib) {
    return derive_torch_pose(frame, require_calibration(calib));
}

inline GridCoords world_to_grid(const Vec3& point, const CalibrationState& calib) {
    const Vec3 d = point - calib.grid_plane().point;
    return GridCoords{d.dot(calib.weld_direction()), d.dot(calib.side()), d.dot(calib.normal())};
}

inline GridCoords world_to_grid(const Vec3& point, const std::optional<CalibrationState>& calib) {
    return world_to_grid(point, require_calibration(calib));
}

inline Vec3 grid_to_world(const GridCoords& g, const CalibrationState& calib) {
    return calib.grid_plane().point + g.u * calib.weld_direction() + g.v * calib.side() +
           g.h * calib.normal();
}

/// Tolerance for "the tap point lies on the grid plane".
inline constexpr double kTapPlaneTolerance = 1e-6;
/// Corrections larger than this mean tracking failed rather than drifted.
inline constexpr double kMaxTapCorrection = 0.10;

/// Replaces the tip-offset translation so that the tap frame's tip lands
/// exactly on `known_tap_point`. The offset rotation is left untouched.
inline CalibrationState tap_recalibrate(const PoseFrame& tap_frame, const Vec3& known_tap_point,
                                        const CalibrationState& calib) {
    if (std::abs(world_to_grid(known_tap_point, calib).h) > kTapPlaneTolerance)
        throw PreconditionError("tap point does not lie on the grid plane");
    const TorchPose current = derive_torch_pose(tap_frame, calib);
    const double correction = (known_tap_point - current.tip_position).norm();
    if (correction > kMaxTapCorrection) {
        std::ostringstream os;
        os << "tap correction of " << correction << " m exceeds " << kMaxTapCorrection << " m";
        throw ImplausibleTapError(os.str());
    }
    if (correction == 0.0) return calib;
    const Quat q = tap_frame.orientation.normalized();
    const Vec3 translation = q.conjugate() * (known_tap_point - tap_frame.position);
    return calib.with_tip_translation(translation);
}

inline CalibrationState tap_recalibrate(const PoseFrame& tap_frame, const Vec3& known_tap_point,
                                        const std::optional<CalibrationState>& calib) {
    return tap_recalibrate(tap_frame, known_tap_point, require_calibration(calib));
}

}  // namespace weldar
