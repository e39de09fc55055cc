#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "catchplan/types.hpp"

namespace catchplan {

// Thrust must stay at least this large (m/s^2) for the flatness map to be
// well conditioned; below it the thrust direction is undefined.
inline constexpr double kThrustSingularity = 0.1;

// Recover mass-normalized thrust, thrust axis and xy body rates from flat
// outputs:  tau = acc + g e3,  f = |tau|,  z_b = tau / f,
// omega_xy = (jerk - (z_b . jerk) z_b) / f  (this equals d(z_b)/dt).
inline FlatOutputs flatMap(const Vec3& acc, const Vec3& jerk, double gravity = 9.81) {
    const Vec3 tau = acc + gravity * Vec3::UnitZ();
    const double f = tau.norm();
    if (f < kThrustSingularity)
        throw SingularityError("flatMap: thrust magnitude below singularity threshold");
    FlatOutputs out;
    out.thrust = f;
    out.z_body = tau / f;
    out.omega_xy = (jerk - out.z_body.dot(jerk) * out.z_body) / f;
    return out;
}

// Net center sits net_offset above the body center along the thrust axis.
inline Vec3 netCenter(const Vec3& pos, const Vec3& z_body, double net_offset) {
    return pos + net_offset * z_body;
}

// Yaw-free attitude whose body z axis is z_body (for traces/observations).
inline Eigen::Quaterniond attitudeFromThrustDir(const Vec3& z_body) {
    return Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), z_body);
}

}  // namespace catchplan
