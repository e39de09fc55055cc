#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "catchplan/types.hpp"

namespace catchplan {

// Kernels for the per-axis linear-drag ballistic solution
//   v' = g - K v  =>  v(t) = v0 e^{-Kt} + g t phi(Kt),
//                     p(t) = p0 + v0 t phi(Kt) + g t^2 psi(Kt)
// with phi(x) = (1 - e^{-x})/x and psi(x) = (x - 1 + e^{-x})/x^2.
// Series below x = 1e-4 keep both smooth through K = 0 (their limits are
// exactly the drag-free formulas), so no separate drag-free branch exists.
inline double dragPhi(double x) {
    if (std::abs(x) < 1e-4)
        return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
    return -std::expm1(-x) / x;
}

inline double dragPsi(double x) {
    if (std::abs(x) < 1e-4)
        return 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
    return (x + std::expm1(-x)) / (x * x);
}

// d(phi)/dx and d(psi)/dx, used by the drag fit's Gauss-Newton Jacobian.
inline double dragPhiDx(double x) {
    if (std::abs(x) < 1e-4)
        return -0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0;
    return ((x + 1.0) * std::exp(-x) - 1.0) / (x * x);
}

inline double dragPsiDx(double x) {
    if (std::abs(x) < 1e-4)
        return -1.0 / 6.0 + x / 12.0 - x * x / 40.0 + x * x * x / 180.0;
    return (2.0 - x - (x + 2.0) * std::exp(-x)) / (x * x * x);
}

// Differentiable target motion the planner can chase: position, velocity and
// acceleration as analytic functions of absolute time. Queries beyond
// validUntil() throw a domain error; a thrown ball's window ends at landing,
// so a catch scheduled after it is rejected as infeasible timing.
struct TargetPrediction {
    virtual ~TargetPrediction() = default;
    virtual Vec3 position(double t) const = 0;
    virtual Vec3 velocity(double t) const = 0;
    virtual Vec3 acceleration(double t) const = 0;
    virtual double validUntil() const { return std::numeric_limits<double>::infinity(); }
};

// Ballistic model with per-axis linear drag, anchored at time t0.
struct TargetModel final : TargetPrediction {
    double t0 = 0.0;
    Vec3 s0 = Vec3::Zero();   // position at t0
    Vec3 v0 = Vec3::Zero();   // velocity at t0
    Vec3 drag = Vec3::Zero(); // per-axis K >= 0
    double gravity = 9.81;

    Vec3 gravityVec() const { return Vec3(0.0, 0.0, -gravity); }

    Vec3 positionAt(double tau) const {
        checkTau(tau);
        const Vec3 g = gravityVec();
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            const double x = drag[a] * tau;
            p[a] = s0[a] + v0[a] * tau * dragPhi(x) + g[a] * tau * tau * dragPsi(x);
        }
        return p;
    }

    Vec3 velocityAt(double tau) const {
        checkTau(tau);
        const Vec3 g = gravityVec();
        Vec3 v;
        for (int a = 0; a < 3; ++a) {
            const double x = drag[a] * tau;
            v[a] = v0[a] * std::exp(-x) + g[a] * tau * dragPhi(x);
        }
        return v;
    }

    Vec3 accelerationAt(double tau) const {
        return gravityVec() - drag.cwiseProduct(velocityAt(tau));
    }

    Vec3 position(double t) const override { return positionAt(t - t0); }
    Vec3 velocity(double t) const override { return velocityAt(t - t0); }
    Vec3 acceleration(double t) const override { return accelerationAt(t - t0); }

  private:
    static void checkTau(double tau) {
        if (tau < -1e-9) throw std::domain_error("target predict: time before model anchor");
    }
};

}  // namespace catchplan
