#pragma once

#include <Eigen/Dense>

#include "catchplan/target_model.hpp"
#include "catchplan/types.hpp"

namespace catchplan {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Constant-drag ballistic filter over [position; velocity].
struct EkfState {
    Vec6 x = Vec6::Zero();
    Mat6 P = Mat6::Identity();

    Vec3 pos() const { return x.head<3>(); }
    Vec3 vel() const { return x.tail<3>(); }
};

struct EkfParams {
    double q_pos = 1e-4;   // process noise, position block
    double q_vel = 1e-2;   // process noise, velocity block
    double r_meas = 5e-3;  // measurement noise std per axis, meters
    double gravity = 9.81;
};

// Propagate mean and covariance by dt under per-axis drag K. The position
// row is the first-order vel*dt transition; the velocity row is the exact
// exponential with its gravity forcing term.
inline void ekfPredict(EkfState& s, const Vec3& drag, double dt, const EkfParams& prm) {
    if (dt < 0.0) throw std::domain_error("ekfPredict: negative dt");
    Mat6 F = Mat6::Identity();
    Vec6 u = Vec6::Zero();
    const Vec3 g(0.0, 0.0, -prm.gravity);
    for (int a = 0; a < 3; ++a) {
        const double x = drag[a] * dt;
        F(a, 3 + a) = dt;
        F(3 + a, 3 + a) = std::exp(-x);
        u[3 + a] = g[a] * dt * dragPhi(x);
    }
    s.x = F * s.x + u;
    Mat6 Q = Mat6::Zero();
    Q.topLeftCorner<3, 3>() = prm.q_pos * Mat3::Identity();
    Q.bottomRightCorner<3, 3>() = prm.q_vel * Mat3::Identity();
    s.P = F * s.P * F.transpose() + Q;
    s.P = 0.5 * (s.P + s.P.transpose()).eval();
}

// Position-only measurement update in Joseph form (keeps P symmetric PSD).
inline void ekfUpdate(EkfState& s, const Vec3& z, const EkfParams& prm) {
    Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
    H.leftCols<3>() = Mat3::Identity();
    const Mat3 R = prm.r_meas * prm.r_meas * Mat3::Identity();
    const Mat3 S = H * s.P * H.transpose() + R;
    Eigen::FullPivLU<Mat3> lu(S);
    if (!lu.isInvertible())
        throw std::runtime_error("ekfUpdate: singular innovation covariance");
    const Eigen::Matrix<double, 6, 3> K = s.P * H.transpose() * lu.inverse();
    s.x += K * (z - H * s.x);
    const Mat6 IKH = Mat6::Identity() - K * H;
    s.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
    s.P = 0.5 * (s.P + s.P.transpose()).eval();
}

// One filter tick: propagate by dt, then absorb the measurement.
inline void ekfStep(EkfState& s, const Vec3& drag, double dt, const Vec3& z,
                    const EkfParams& prm) {
    ekfPredict(s, drag, dt, prm);
    ekfUpdate(s, z, prm);
}

}  // namespace catchplan
