#pragma once

// Constant-velocity Kalman filter over the grid plane (u, v).

#include <Eigen/Dense>

#include <cmath>

#include "weldar/errors.hpp"

namespace weldar {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct KalmanParams {
    double process_noise_accel = 0.5;     // m/s^2, white acceleration
    double measurement_noise_sd = 0.004;  // m
    double initial_velocity_sd = 0.5;     // m/s, prior for an at-rest start
};

/// Estimate is (u, v, du/dt, dv/dt).
struct KalmanState {
    Vec4 estimate = Vec4::Zero();
    Mat4 covariance = Mat4::Identity();
    double process_noise_accel = 0.5;
    double measurement_noise_sd = 0.004;

    Vec2 position() const { return estimate.head<2>(); }
    Vec2 velocity() const { return estimate.tail<2>(); }

    static KalmanState at_rest(const Vec2& uv, const KalmanParams& p = {}) {
        KalmanState s;
        s.estimate << uv.x(), uv.y(), 0.0, 0.0;
        const double r = p.measurement_noise_sd * p.measurement_noise_sd;
        const double pv = p.initial_velocity_sd * p.initial_velocity_sd;
        s.covariance = Vec4(r, r, pv, pv).asDiagonal();
        s.process_noise_accel = p.process_noise_accel;
        s.measurement_noise_sd = p.measurement_noise_sd;
        return s;
    }

    /// Two-point start: position from the second measurement, velocity from
    /// the finite difference, with the matching covariance.
    static KalmanState from_two_points(const Vec2& first, const Vec2& second, double dt,
                                       const KalmanParams& p = {}) {
        if (!(dt > 0.0)) throw PreconditionError("two-point initialization needs dt > 0");
        KalmanState s;
        const Vec2 vel = (second - first) / dt;
        s.estimate << second.x(), second.y(), vel.x(), vel.y();
        const double r = p.measurement_noise_sd * p.measurement_noise_sd;
        s.covariance.setZero();
        for (int axis = 0; axis < 2; ++axis) {
            s.covariance(axis, axis) = r;
            s.covariance(axis, axis + 2) = r / dt;
            s.covariance(axis + 2, axis) = r / dt;
            s.covariance(axis + 2, axis + 2) = 2.0 * r / (dt * dt);
        }
        s.process_noise_accel = p.process_noise_accel;
        s.measurement_noise_sd = p.measurement_noise_sd;
        return s;
    }
};

inline constexpr double kCovariancePsdTolerance = 1e-9;

inline void check_covariance(const Mat4& P) {
    if (!P.allFinite()) throw NumericalError("Kalman covariance is not finite");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > kCovariancePsdTolerance)
        throw NumericalError("Kalman covariance lost symmetry");
    Eigen::SelfAdjointEigenSolver<Mat4> eig(P, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kCovariancePsdTolerance)
        throw NumericalError("Kalman covariance is not positive semi-definite");
}

/// One predict + position-only update.
inline KalmanState kalman_step(const KalmanState& state, const Vec2& measured_uv, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("kalman_step requires dt > 0");

    Mat4 F = Mat4::Identity();
    F(0, 2) = dt;
    F(1, 3) = dt;

    const double qa = state.process_noise_accel * state.process_noise_accel;
    const double dt2 = dt * dt;
    Mat4 Q = Mat4::Zero();
    for (int axis = 0; axis < 2; ++axis) {
        Q(axis, axis) = qa * dt2 * dt2 / 4.0;
        Q(axis, axis + 2) = qa * dt2 * dt / 2.0;
        Q(axis + 2, axis) = qa * dt2 * dt / 2.0;
        Q(axis + 2, axis + 2) = qa * dt2;
    }

    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    const double r = state.measurement_noise_sd * state.measurement_noise_sd;
    const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * r;

    const Vec4 x_pred = F * state.estimate;
    const Mat4 P_pred = F * state.covariance * F.transpose() + Q;

    const Eigen::Matrix2d S = H * P_pred * H.transpose() + R;
    const Eigen::Matrix<double, 4, 2> K = P_pred * H.transpose() * S.inverse();
    const Vec2 innovation = measured_uv - H * x_pred;

    KalmanState next = state;
    next.estimate = x_pred + K * innovation;
    // Joseph form keeps the update symmetric PSD in floating point.
    const Mat4 IKH = Mat4::Identity() - K * H;
    Mat4 P = IKH * P_pred * IKH.transpose() + K * R * K.transpose();
    P = 0.5 * (P + P.transpose());
    check_covariance(P);
    next.covariance = P;
    return next;
}

}  // namespace weldar
