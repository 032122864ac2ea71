#include "test_util.hpp"

using namespace weldar;
using namespace weldar::testing;

namespace {

/// Textbook filter (covariance update P = (I - KH) P), written out per
/// element, as an oracle for the Joseph-form implementation.
struct NaiveKalman {
    Eigen::Vector4d x;
    Eigen::Matrix4d P;
    double qa, r;

    void step(const Eigen::Vector2d& z, double dt) {
        Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
        F(0, 2) = F(1, 3) = dt;
        Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
        const double q11 = qa * qa * std::pow(dt, 4) / 4, q12 = qa * qa * std::pow(dt, 3) / 2, q22 = qa * qa * dt * dt;
        Q(0, 0) = Q(1, 1) = q11;
        Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = q12;
        Q(2, 2) = Q(3, 3) = q22;
        x = F * x;
        P = F * P * F.transpose() + Q;
        Eigen::Matrix2d S = P.topLeftCorner<2, 2>() + Eigen::Matrix2d::Identity() * r * r;
        Eigen::Matrix<double, 4, 2> K = P.leftCols<2>() * S.inverse();
        x += K * (z - x.head<2>());
        Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
        H(0, 0) = H(1, 1) = 1;
        P = (Eigen::Matrix4d::Identity() - K * H) * P;
    }
};

constexpr double kDt = 1.0 / 90.0;

}  // namespace

TEST(Kalman, StationaryStaysAtRest) {
    KalmanState s = KalmanState::at_rest(Vec2(0.1, -0.2));
    for (int i = 0; i < 900; ++i) s = kalman_step(s, Vec2(0.1, -0.2), kDt);
    EXPECT_LT(s.velocity().norm(), 1e-12);
    EXPECT_LT((s.position() - Vec2(0.1, -0.2)).norm(), 1e-12);
}

TEST(Kalman, ConvergesOnConstantVelocity) {
    KalmanState s = KalmanState::at_rest(Vec2(0, 0));
    int converged_at = -1;
    for (int k = 1; k <= 900; ++k) {
        s = kalman_step(s, Vec2(0.01 * k * kDt, 0), kDt);
        if (converged_at < 0 && std::abs(s.velocity().x() - 0.01) <= 0.0001) converged_at = k;
    }
    ASSERT_GT(converged_at, 0);
    EXPECT_LE(converged_at, 90);
    EXPECT_NEAR(s.velocity().x(), 0.01, 1e-6);
}

TEST(Kalman, MatchesTextbookFilter) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 0.004);
    KalmanState s = KalmanState::at_rest(Vec2(0, 0));
    NaiveKalman ref{Eigen::Vector4d::Zero(), s.covariance, 0.5, 0.004};
    for (int k = 1; k <= 500; ++k) {
        const Vec2 z(0.005 * k * kDt + n(rng), -0.002 * k * kDt + n(rng));
        s = kalman_step(s, z, kDt);
        ref.step(z, kDt);
        ASSERT_LT((s.estimate - ref.x).norm(), 1e-9) << "step " << k;
    }
}

TEST(Kalman, SuppressesJitter) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.004);
    KalmanState s = KalmanState::at_rest(Vec2(0, 0));
    Vec2 prev(n(rng), n(rng));
    double raw = 0, filtered = 0;
    for (int k = 0; k < 900; ++k) {
        const Vec2 z(n(rng), n(rng));
        s = kalman_step(s, z, kDt);
        raw += (z - prev).norm() / kDt;
        filtered += s.velocity().norm();
        prev = z;
    }
    EXPECT_LT(filtered / 900, 0.10 * raw / 900);
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
    KalmanState s = KalmanState::at_rest(Vec2(0, 0));
    for (int k = 0; k < 20000; ++k) s = kalman_step(s, Vec2(0, 0), kDt);
    EXPECT_NO_THROW(check_covariance(s.covariance));
    EXPECT_EQ(s.covariance, s.covariance.transpose());
}

TEST(Kalman, Preconditions) {
    KalmanState s = KalmanState::at_rest(Vec2(0, 0));
    EXPECT_THROW(kalman_step(s, Vec2(0, 0), 0.0), PreconditionError);
    EXPECT_THROW(kalman_step(s, Vec2(0, 0), -kDt), PreconditionError);
    s.covariance(0, 0) = NAN;
    EXPECT_THROW(kalman_step(s, Vec2(0, 0), kDt), NumericalError);
    Mat4 bad = Mat4::Identity();
    bad(0, 0) = -1;
    EXPECT_THROW(check_covariance(bad), NumericalError);
}

TEST(Kalman, TwoPointStartIsExactOnCleanMotion) {
    const KalmanState s = KalmanState::from_two_points(Vec2(0, 0), Vec2(0.001, 0), 0.1);
    EXPECT_NEAR(s.velocity().x(), 0.01, 1e-15);
    EXPECT_THROW(KalmanState::from_two_points(Vec2(0, 0), Vec2(0, 0), 0.0), PreconditionError);
}
