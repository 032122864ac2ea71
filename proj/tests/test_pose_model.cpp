#include "test_util.hpp"

using namespace weldar;
using namespace weldar::testing;

namespace {

CalibrationState calib_with_offset(const Vec3& t) {
    return CalibrationState::from_anchor(Pose{}, RigidOffset{t, Quat::Identity()});
}

}  // namespace

TEST(DeriveTorchPose, IdentityZeroOffset) {
    const auto calib = calib_with_offset(Vec3::Zero());
    const auto tp = derive_torch_pose(frame_at(0, 0, Vec3(0.1, 0.2, 0.3)), calib);
    EXPECT_TRUE(tp.tip_position.isApprox(Vec3(0.1, 0.2, 0.3), 1e-15));
    EXPECT_TRUE(tp.barrel_axis.isApprox(Vec3::UnitZ(), 1e-15));
}

TEST(DeriveTorchPose, PureTranslation) {
    const auto calib = calib_with_offset(Vec3(0, 0, -0.10));
    const auto tp = derive_torch_pose(frame_at(0, 0, Vec3(0, 0, 0.5)), calib);
    EXPECT_NEAR(tp.tip_position.z(), 0.40, 1e-15);
    EXPECT_NEAR(tp.tip_position.x(), 0.0, 1e-15);
}

TEST(DeriveTorchPose, QuarterTurnAboutX) {
    const auto calib = calib_with_offset(Vec3(0, 0, -0.10));
    const Vec3 p(1.0, 2.0, 3.0);
    const Quat q = quat_from_axis_angle(Vec3::UnitX(), kPi / 2);
    const auto tp = derive_torch_pose(frame_at(0, 0, p, q), calib);
    // Hand computation: Rx(90) (0,0,-0.1) = (0, 0.1, 0).
    EXPECT_TRUE((tp.tip_position - p).isApprox(Vec3(0, 0.10, 0), 1e-12));
    EXPECT_TRUE((tp.tip_position - p).isApprox(rotate_rodrigues(Vec3::UnitX(), kPi / 2, Vec3(0, 0, -0.1)), 1e-12));
}

TEST(DeriveTorchPose, MatchesRodriguesOnRandomRotations) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    const Vec3 offset(0.013, -0.021, -0.118);
    const auto calib = calib_with_offset(offset);
    for (int i = 0; i < 500; ++i) {
        const Vec3 axis(n(rng), n(rng), n(rng));
        const double a = ang(rng);
        const Vec3 p(n(rng), n(rng), n(rng));
        const auto tp = derive_torch_pose(frame_at(0, i, p, quat_from_axis_angle(axis, a)), calib);
        EXPECT_LT((tp.tip_position - (p + rotate_rodrigues(axis, a, offset))).norm(), 1e-12);
        EXPECT_LT((tp.barrel_axis - rotate_rodrigues(axis, a, Vec3::UnitZ())).norm(), 1e-12);
    }
}

TEST(DeriveTorchPose, RejectsNonUnitQuaternion) {
    const auto calib = calib_with_offset(Vec3::Zero());
    EXPECT_THROW(derive_torch_pose(frame_at(0, 0, Vec3::Zero(), Quat(2, 0, 0, 0)), calib), DegeneratePoseError);
    EXPECT_THROW(derive_torch_pose(frame_at(0, 0, Vec3::Zero(), Quat(NAN, 0, 0, 0)), calib), DegeneratePoseError);
}

TEST(DeriveTorchPose, RequiresCalibration) {
    std::optional<CalibrationState> none;
    EXPECT_THROW(derive_torch_pose(frame_at(0, 0, Vec3::Zero()), none), UncalibratedError);
}

TEST(Calibration, RejectsInconsistentGeometry) {
    EXPECT_THROW(CalibrationState(Pose{}, GridPlane{Vec3::Zero(), Vec3(0, 0, 2)}, Vec3::UnitX(), {}),
                 InvalidCalibrationError);
    EXPECT_THROW(CalibrationState(Pose{}, GridPlane{Vec3::Zero(), Vec3::UnitZ()}, Vec3(1, 0, 1).normalized(), {}),
                 InvalidCalibrationError);
}

TEST(TapRecalibrate, ConsistentTapIsFixedPoint) {
    const auto calib = calib_with_offset(Vec3(0, 0, -0.12));
    const auto f = frame_at(0, 0, Vec3(0.05, 0.02, 0.12));
    const auto out = tap_recalibrate(f, Vec3(0.05, 0.02, 0.0), calib);
    EXPECT_EQ(out.tip_offset().translation, calib.tip_offset().translation);
}

TEST(TapRecalibrate, FiveMillimetreCorrection) {
    const auto calib = tilted_calibration();
    const Quat q = quat_from_axis_angle(Vec3(0.2, 1.0, -0.3), 0.4);
    const Vec3 known = grid_to_world(GridCoords{0.03, -0.01, 0.0}, calib);
    // Tip reads 5 mm above the true point: move the controller up by 5 mm.
    const Vec3 true_pos = known - q * calib.tip_offset().translation;
    const PoseFrame f = frame_at(0, 0, true_pos + 0.005 * calib.normal(), q);
    const double before = compute_ctwd(derive_torch_pose(f, calib), calib);
    EXPECT_NEAR(before, 5.0, 1e-9);

    const auto out = tap_recalibrate(f, known, calib);
    const Vec3 shift_world = q * (out.tip_offset().translation - calib.tip_offset().translation);
    EXPECT_NEAR(shift_world.norm(), 0.005, 1e-12);
    EXPECT_LT((shift_world.normalized() + calib.normal()).norm(), 1e-9);
    EXPECT_LT((derive_torch_pose(f, out).tip_position - known).norm(), 1e-9);
    EXPECT_NEAR(compute_ctwd(derive_torch_pose(f, out), out), 0.0, 1e-6);
}

TEST(TapRecalibrate, ImplausibleCorrection) {
    const auto calib = calib_with_offset(Vec3(0, 0, -0.12));
    const auto f = frame_at(0, 0, Vec3(0, 0, 0.32));
    EXPECT_THROW(tap_recalibrate(f, Vec3(0, 0, 0), calib), ImplausibleTapError);
}

TEST(TapRecalibrate, TapPointMustLieOnPlane) {
    const auto calib = calib_with_offset(Vec3(0, 0, -0.12));
    EXPECT_THROW(tap_recalibrate(frame_at(0, 0, Vec3(0, 0, 0.12)), Vec3(0, 0, 0.01), calib), PreconditionError);
}

TEST(WorldToGrid, OriginAndAxis) {
    const auto calib = tilted_calibration();
    const auto o = world_to_grid(calib.grid_plane().point, calib);
    EXPECT_NEAR(o.u, 0, 1e-15);
    EXPECT_NEAR(o.v, 0, 1e-15);
    EXPECT_NEAR(o.h, 0, 1e-15);
    const auto a = world_to_grid(calib.grid_plane().point + 0.05 * calib.weld_direction(), calib);
    EXPECT_NEAR(a.u, 0.05, 1e-15);
    EXPECT_NEAR(a.v, 0.0, 1e-15);
    EXPECT_NEAR(a.h, 0.0, 1e-15);
}

TEST(WorldToGrid, RandomRoundTrip) {
    const auto calib = tilted_calibration();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        EXPECT_LT((grid_to_world(world_to_grid(p, calib), calib) - p).norm(), 1e-12);
    }
}

TEST(Units, SpeedConversion) {
    EXPECT_NEAR(mps_to_ipm(0.008467), 0.008467 / 0.0254 * 60.0, 1e-12);
    EXPECT_NEAR(mps_to_ipm(0.008467), 20.0, 0.01);
    EXPECT_NEAR(ipm_to_mps(mps_to_ipm(0.3)), 0.3, 1e-15);
}

TEST(TargetRanges, DefaultsAndValidation) {
    const TargetRanges r;
    EXPECT_EQ(r.ctwd_mm, (Range{6, 15}));
    EXPECT_EQ(r.travel_angle_deg, (Range{-10, 10}));
    EXPECT_EQ(r.work_angle_deg, (Range{75, 90}));
    EXPECT_EQ(r.speed_ipm, (Range{15, 25}));
    TargetRanges bad;
    bad.speed_ipm = {25, 15};
    EXPECT_THROW(bad.validate(), PreconditionError);
}

TEST(WeldLine, ValidatesAgainstPlane) {
    const auto calib = calib_with_offset(Vec3::Zero());
    WeldLineSpec l = default_line(calib);
    EXPECT_NO_THROW(l.validate(calib));
    EXPECT_NEAR(l.end_point().x(), 5 * 0.0254, 1e-15);
    l.direction = Vec3(1, 0, 1).normalized();
    EXPECT_THROW(l.validate(calib), PreconditionError);
}
