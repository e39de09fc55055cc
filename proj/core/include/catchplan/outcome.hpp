#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "catchplan/types.hpp"

namespace catchplan {

// Geometric catch test at one instant: the net mouth must contain the ball
// and the net axis must oppose the ball's arrival direction within the
// approach cone. A (numerically) stationary ball passes the cone trivially.
struct CatchCheck {
    double offset = 0.0;  // ball center to net center (m)
    double angle = 0.0;   // arrival direction to net axis (rad)
    bool position_ok = false;
    bool angle_ok = false;

    bool ok() const { return position_ok && angle_ok; }
};

inline CatchCheck checkCatchGeometry(const Vec3& net_center, const Vec3& net_axis,
                                     const Vec3& ball_pos, const Vec3& ball_vel,
                                     const Limits& lim) {
    CatchCheck out;
    out.offset = (net_center - ball_pos).norm();
    out.position_ok = out.offset <= lim.r_net - lim.r_ball;
    const double speed = ball_vel.norm();
    if (speed > 1e-9) {
        const double c = (-ball_vel / speed).dot(net_axis);
        out.angle = std::acos(std::min(1.0, std::max(-1.0, c)));
    }
    out.angle_ok = out.angle <= lim.theta_max;
    return out;
}

// Per-episode result: one entry per target plus a mission-level flag for
// whether every planning attempt produced a usable trajectory.
struct CatchOutcome {
    struct PerTarget {
        bool success = false;
        double catch_time = 0.0;  // seconds from episode start
        double offset = 0.0;
        double angle = 0.0;
    };
    std::vector<PerTarget> targets;
    bool planning_success = false;

    int caughtCount() const {
        int n = 0;
        for (const auto& t : targets) n += t.success ? 1 : 0;
        return n;
    }

    bool allCaught() const {
        return !targets.empty() && caughtCount() == static_cast<int>(targets.size());
    }
};

// One decision/optimizer pairing: the policy's predicted catch times against
// the times the trajectory optimizer converged to, aligned per target.
struct DecisionRecord {
    Eigen::VectorXd t_predicted;
    Eigen::VectorXd t_optimized;
};

struct Metrics {
    double planning_sr = 0.0;  // fraction of episodes with all plans usable
    double catching_sr = 0.0;  // fraction of episodes with every target caught
    double otr = 0.0;          // mean |T_o - T_p| / T_o over decision pairs
    int episodes = 0;
    int decision_pairs = 0;
};

// Success fractions over episodes plus the optimal-time ratio over all
// per-target decision pairs.
inline Metrics computeMetrics(const std::vector<CatchOutcome>& outcomes,
                              const std::vector<DecisionRecord>& decisions) {
    if (outcomes.empty()) throw std::domain_error("metrics: no outcomes");
    Metrics m;
    m.episodes = static_cast<int>(outcomes.size());
    int planned = 0, caught = 0;
    for (const auto& o : outcomes) {
        planned += o.planning_success ? 1 : 0;
        caught += o.allCaught() ? 1 : 0;
    }
    m.planning_sr = static_cast<double>(planned) / m.episodes;
    m.catching_sr = static_cast<double>(caught) / m.episodes;

    double accum = 0.0;
    int pairs = 0;
    for (const auto& d : decisions) {
        if (d.t_predicted.size() != d.t_optimized.size())
            throw std::domain_error("metrics: decision pair size mismatch");
        for (int i = 0; i < d.t_predicted.size(); ++i) {
            if (d.t_optimized[i] <= 0)
                throw std::domain_error("metrics: optimized time must be positive");
            accum += std::abs(d.t_optimized[i] - d.t_predicted[i]) / d.t_optimized[i];
            ++pairs;
        }
    }
    m.decision_pairs = pairs;
    m.otr = pairs > 0 ? accum / pairs : 0.0;
    return m;
}

}  // namespace catchplan
