#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace catchplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Mass-normalized actuation and geometric limits shared by the penalty
// transcription and the post-hoc feasibility checks.
struct Limits {
    double v_max = 5.0;       // m/s
    double omega_max = 6.0;   // rad/s, body-rate norm on the xy body axes
    double f_max = 20.0;      // m/s^2, mass-normalized collective thrust
    double f_min = 2.0;       // m/s^2, lower thrust bound (keeps flatness regular)
    double theta_max = 0.5235987755982988;  // rad, max angle between -target-vel and net axis
    double z_min = 0.3;       // m, ground clearance
    double gravity = 9.81;    // m/s^2
    double net_offset = 0.2;  // m, body center -> net center along body z
    double r_net = 0.125;     // m, net aperture radius
    double r_ball = 0.02;     // m, target ball radius
};

// Full flat state of the vehicle (what the trajectory evaluates to).
struct FlatState {
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Vec3 acc = Vec3::Zero();
    Vec3 jerk = Vec3::Zero();
};

// Thrust direction, magnitude and xy body rates recovered from flat outputs.
struct FlatOutputs {
    double thrust = 0.0;    // mass-normalized, m/s^2
    Vec3 z_body = Vec3::UnitZ();
    Vec3 omega_xy = Vec3::Zero();  // z component always 0
};

struct SingularityError : std::domain_error {
    explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace catchplan
