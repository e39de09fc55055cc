#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "catchplan/rng.hpp"
#include "catchplan/target_model.hpp"
#include "catchplan/types.hpp"

namespace catchplan {

// Target motion families: thrown balls on a ballistic arc, vertically
// oscillating hovers with a horizontal drift, an expanding equilateral
// triangle of constant-velocity movers, and a hexagon formation flying in
// parallel. Each family fixes its canonical target count and horizon.
enum class ScenarioFamily { Parabola, Harmonic, Triangle, Hexagon };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

struct ScenarioSpec {
    ScenarioFamily family = ScenarioFamily::Parabola;
    int targets = 1;
    double horizon = 2.0;  // episode length and latest usable catch time (s)
    uint64_t seed = 1;     // used by the seed-only generate() overload

    // Quad initialization cube (uniform within +/- quad_half per axis).
    Vec3 quad_center = Vec3(1.2, 0.0, 1.4);
    double quad_half = 0.5;

    // Parabola: throws toward the quad from throw_origin (the second ball
    // mirrors across the quad's x), launched throw_stagger seconds apart.
    Vec3 throw_origin = Vec3(4.0, 0.0, 0.8);
    Vec3 throw_jitter = Vec3(0.3, 0.3, 0.1);
    Interval throw_vx{-3.2, -1.8};
    Interval throw_vy{-0.3, 0.3};
    Interval throw_vz{6.5, 8.0};
    Interval throw_stagger{0.4, 0.8};
    double gravity = 9.81;

    // Harmonic: vertical sine about the start height plus level drift.
    double osc_amplitude = 1.0;
    Interval osc_height{1.2, 1.8};
    Interval osc_radius{1.5, 3.0};
    Interval osc_omega{0.8, 1.5};
    Interval osc_drift{0.2, 0.6};

    // Triangle / hexagon formations of constant-velocity movers.
    double triangle_radius = 2.0;
    double hexagon_side = 2.0;
    Interval formation_speed{0.3, 0.8};
    Interval formation_height{1.0, 1.8};

    // Canonical target count and horizon per family; Parabola also admits
    // a single-ball variant via the targets argument.
    static ScenarioSpec preset(ScenarioFamily family, int targets = 0) {
        ScenarioSpec s;
        s.family = family;
        switch (family) {
            case ScenarioFamily::Parabola:
                s.targets = targets > 0 ? targets : 2;
                s.horizon = 2.0;
                break;
            case ScenarioFamily::Harmonic:
                s.targets = 2;
                s.horizon = 7.0;
                break;
            case ScenarioFamily::Triangle:
                s.targets = 3;
                s.horizon = 6.0;
                break;
            case ScenarioFamily::Hexagon:
                s.targets = 6;
                s.horizon = 10.0;
                break;
        }
        if (targets > 0) s.targets = targets;
        return s;
    }
};

inline void validateSpec(const ScenarioSpec& spec) {
    if (spec.horizon <= 0) throw std::domain_error("scenario: horizon must be positive");
    const int n = spec.targets;
    switch (spec.family) {
        case ScenarioFamily::Parabola:
            if (n < 1 || n > 2) throw std::domain_error("scenario: parabola carries 1 or 2 balls");
            break;
        case ScenarioFamily::Harmonic:
            if (n != 2) throw std::domain_error("scenario: harmonic carries 2 targets");
            break;
        case ScenarioFamily::Triangle:
            if (n != 3) throw std::domain_error("scenario: triangle carries 3 targets");
            break;
        case ScenarioFamily::Hexagon:
            if (n != 6) throw std::domain_error("scenario: hexagon carries 6 targets");
            break;
    }
}

// Analytic target truth: closed-form position with exact derivatives. The
// formula extrapolates smoothly before t0; past valid_until (a thrown ball's
// landing) queries throw, marking any later catch as infeasible timing.
class TargetTruth final : public TargetPrediction {
  public:
    ScenarioFamily family = ScenarioFamily::Parabola;
    double t0 = 0.0;  // launch/anchor time of the motion
    Vec3 p0 = Vec3::Zero();
    Vec3 v0 = Vec3::Zero();
    Vec3 accel = Vec3::Zero();  // parabola gravity; zero elsewhere
    double amp = 0.0;           // harmonic vertical amplitude
    double omega = 0.0;         // harmonic angular frequency
    double valid_until = std::numeric_limits<double>::infinity();

    double validUntil() const override { return valid_until; }

    Vec3 position(double t) const override {
        const double tau = checkedTau(t);
        Vec3 p = p0 + v0 * tau + 0.5 * tau * tau * accel;
        if (family == ScenarioFamily::Harmonic) p.z() += amp * std::sin(omega * tau);
        return p;
    }

    Vec3 velocity(double t) const override {
        const double tau = checkedTau(t);
        Vec3 v = v0 + tau * accel;
        if (family == ScenarioFamily::Harmonic) v.z() += amp * omega * std::cos(omega * tau);
        return v;
    }

    Vec3 acceleration(double t) const override {
        const double tau = checkedTau(t);
        Vec3 a = accel;
        if (family == ScenarioFamily::Harmonic)
            a.z() -= amp * omega * omega * std::sin(omega * tau);
        return a;
    }

  private:
    double checkedTau(double t) const {
        if (t > valid_until + 1e-9)
            throw std::domain_error("target truth: queried beyond the flight window");
        return t - t0;
    }
};

// Quad start state for an episode: at rest, uniform in the spawn cube.
inline FlatState sampleQuadStart(const ScenarioSpec& spec, Rng& rng) {
    FlatState s;
    for (int i = 0; i < 3; ++i)
        s.pos[i] = spec.quad_center[i] + rng.uniform(-spec.quad_half, spec.quad_half);
    return s;
}

// Randomized targets for one episode. Draw order is fixed so that a given
// (spec, rng state) pair always produces the same instance.
inline std::vector<TargetTruth> generate(const ScenarioSpec& spec, Rng& rng) {
    validateSpec(spec);
    std::vector<TargetTruth> out(spec.targets);
    const double two_pi = 6.283185307179586476925286766559;
    switch (spec.family) {
        case ScenarioFamily::Parabola: {
            for (int i = 0; i < spec.targets; ++i) {
                TargetTruth& t = out[i];
                t.family = spec.family;
                t.accel = Vec3(0.0, 0.0, -spec.gravity);
                const double side = (i % 2 == 0) ? 1.0 : -1.0;  // alternate throw sides
                Vec3 origin = spec.throw_origin;
                if (side < 0) origin.x() = 2.0 * spec.quad_center.x() - origin.x();
                for (int k = 0; k < 3; ++k)
                    t.p0[k] = origin[k] + rng.uniform(-spec.throw_jitter[k], spec.throw_jitter[k]);
                t.v0 = Vec3(side * spec.throw_vx.sample(rng), spec.throw_vy.sample(rng),
                            spec.throw_vz.sample(rng));
                t.t0 = (i == 0) ? 0.0 : out[i - 1].t0 + spec.throw_stagger.sample(rng);
                // Flight ends at ground impact; catches past it are infeasible.
                const double vz = t.v0.z();
                t.valid_until =
                    t.t0 + (vz + std::sqrt(vz * vz + 2.0 * spec.gravity * t.p0.z())) / spec.gravity;
            }
            break;
        }
        case ScenarioFamily::Harmonic: {
            for (int i = 0; i < spec.targets; ++i) {
                TargetTruth& t = out[i];
                t.family = spec.family;
                t.amp = spec.osc_amplitude;
                t.omega = spec.osc_omega.sample(rng);
                const double bearing = rng.uniform(0.0, two_pi);
                const double radius = spec.osc_radius.sample(rng);
                t.p0 = spec.quad_center + radius * Vec3(std::cos(bearing), std::sin(bearing), 0.0);
                t.p0.z() = spec.osc_height.sample(rng);
                const double heading = rng.uniform(0.0, two_pi);
                t.v0 = spec.osc_drift.sample(rng) * Vec3(std::cos(heading), std::sin(heading), 0.0);
            }
            break;
        }
        case ScenarioFamily::Triangle: {
            // Equilateral formation around a center near the quad; each target
            // recedes along its own vertex bearing, so velocity directions are
            // pairwise exactly 2*pi/3 apart at a shared speed.
            const double phase = rng.uniform(0.0, two_pi);
            const double speed = spec.formation_speed.sample(rng);
            const double height = spec.formation_height.sample(rng);
            for (int i = 0; i < spec.targets; ++i) {
                TargetTruth& t = out[i];
                t.family = spec.family;
                const double ang = phase + two_pi * i / 3.0;
                const Vec3 dir(std::cos(ang), std::sin(ang), 0.0);
                t.p0 = Vec3(spec.quad_center.x(), spec.quad_center.y(), height) +
                       spec.triangle_radius * dir;
                t.v0 = speed * dir;
            }
            break;
        }
        case ScenarioFamily::Hexagon: {
            // Regular hexagon (circumradius equals the side length) flying in
            // parallel: every target shares one constant velocity vector.
            const double phase = rng.uniform(0.0, two_pi);
            const double speed = spec.formation_speed.sample(rng);
            const double height = spec.formation_height.sample(rng);
            const double heading = rng.uniform(0.0, two_pi);
            const Vec3 vel = speed * Vec3(std::cos(heading), std::sin(heading), 0.0);
            for (int i = 0; i < spec.targets; ++i) {
                TargetTruth& t = out[i];
                t.family = spec.family;
                const double ang = phase + two_pi * i / 6.0;
                t.p0 = Vec3(spec.quad_center.x(), spec.quad_center.y(), height) +
                       spec.hexagon_side * Vec3(std::cos(ang), std::sin(ang), 0.0);
                t.v0 = vel;
            }
            break;
        }
    }
    return out;
}

inline std::vector<TargetTruth> generate(const ScenarioSpec& spec) {
    Rng rng(spec.seed);
    return generate(spec, rng);
}

}  // namespace catchplan
