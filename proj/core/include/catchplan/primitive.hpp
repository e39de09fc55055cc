#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "catchplan/trajectory.hpp"
#include "catchplan/types.hpp"

namespace catchplan {

// Full position/velocity/acceleration boundary condition for one endpoint.
struct BoundaryState {
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Vec3 acc = Vec3::Zero();
};

// Minimum-aggregate-jerk quintic between two full states, per axis
//   p(t) = p0 + v0 t + a0 t^2/2 + g t^3/6 + b t^4/24 + a t^5/120
// with (a, b, g) in closed form, minimizing (1/T) \int_0^T ||jerk||^2 dt.
struct PrimitiveSolution {
    Vec3 alpha = Vec3::Zero();  // t^5/120 coefficient block
    Vec3 beta = Vec3::Zero();   // t^4/24
    Vec3 gamma = Vec3::Zero();  // t^3/6
    BoundaryState start;
    double duration = 0.0;

    Vec3 position(double t) const {
        return start.pos + start.vel * t + start.acc * (t * t / 2.0) +
               gamma * (t * t * t / 6.0) + beta * (t * t * t * t / 24.0) +
               alpha * (t * t * t * t * t / 120.0);
    }
    Vec3 velocity(double t) const {
        return start.vel + start.acc * t + gamma * (t * t / 2.0) +
               beta * (t * t * t / 6.0) + alpha * (t * t * t * t / 24.0);
    }
    Vec3 acceleration(double t) const {
        return start.acc + gamma * t + beta * (t * t / 2.0) + alpha * (t * t * t / 6.0);
    }
    Vec3 jerk(double t) const { return gamma + beta * t + alpha * (t * t / 2.0); }

    Piece asPiece() const {
        Piece p;
        p.duration = duration;
        p.coeff.resize(3, 6);
        p.coeff.col(0) = start.pos;
        p.coeff.col(1) = start.vel;
        p.coeff.col(2) = start.acc / 2.0;
        p.coeff.col(3) = gamma / 6.0;
        p.coeff.col(4) = beta / 24.0;
        p.coeff.col(5) = alpha / 120.0;
        return p;
    }
};

inline PrimitiveSolution solvePrimitive(const BoundaryState& from, const BoundaryState& to,
                                        double T) {
    if (!(T > 0.0)) throw std::domain_error("solvePrimitive: duration must be positive");
    PrimitiveSolution sol;
    sol.start = from;
    sol.duration = T;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    const Vec3 dp = to.pos - from.pos - from.vel * T - from.acc * (T2 / 2.0);
    const Vec3 dv = to.vel - from.vel - from.acc * T;
    const Vec3 da = to.acc - from.acc;
    sol.alpha = (60.0 * T2 * da - 360.0 * T * dv + 720.0 * dp) / T5;
    sol.beta = (-24.0 * T3 * da + 168.0 * T2 * dv - 360.0 * T * dp) / T5;
    sol.gamma = (3.0 * T4 * da - 24.0 * T3 * dv + 60.0 * T2 * dp) / T5;
    return sol;
}

// Time-normalized aggregate jerk of the quintic, summed over axes:
// (1/T) \int ||jerk||^2 = g.g + b.g T + b.b T^2/3 + a.g T^2/3 + a.b T^3/4
//                         + a.a T^4/20.
inline double primitiveCost(const PrimitiveSolution& s) {
    const double T = s.duration, T2 = T * T, T3 = T2 * T, T4 = T3 * T;
    double c = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double al = s.alpha[a], be = s.beta[a], ga = s.gamma[a];
        c += ga * ga + be * ga * T + be * be * T2 / 3.0 + al * ga * T2 / 3.0 +
             al * be * T3 / 4.0 + al * al * T4 / 20.0;
    }
    return c;
}

// Sample the primitive at uniform fractions to seed a piecewise optimizer:
// M-1 interior waypoints and M equal durations.
struct WaypointSeed {
    std::vector<Vec3> waypoints;  // interior only, size M-1
    std::vector<double> durations;  // size M
};

inline WaypointSeed seedWaypoints(const PrimitiveSolution& s, int pieces) {
    if (pieces < 1) throw std::domain_error("seedWaypoints: need at least one piece");
    WaypointSeed seed;
    const double dt = s.duration / pieces;
    for (int j = 1; j < pieces; ++j) seed.waypoints.push_back(s.position(j * dt));
    seed.durations.assign(pieces, dt);
    return seed;
}

}  // namespace catchplan
