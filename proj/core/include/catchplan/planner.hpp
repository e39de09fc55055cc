#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "catchplan/lbfgs.hpp"
#include "catchplan/primitive.hpp"
#include "catchplan/transcription.hpp"

namespace catchplan {

// Solver settings tuned for the catching cost. The terminal hinges make the
// landscape stiff and mildly nonsmooth at the hinge knee, which quasi-Newton
// handles far better with a deep secant history; the iteration cap and the
// plateau stop bound a cold two-target solve well inside real-time budgets.
inline SolverConfig plannerSolverDefaults() {
    SolverConfig s;
    s.memory = 64;
    s.max_iters = 1500;
    s.g_tol = 1e-6;
    s.f_tol_rel = 1e-7;
    return s;
}

struct PlannerConfig {
    int pieces = 5;  // spline pieces per catch segment
    PenaltyWeights weights;
    Limits limits;
    SolverConfig solver = plannerSolverDefaults();
    double min_horizon = 0.05;  // smallest usable per-target time allowance (s)
};

struct PlanResult {
    bool success = false;  // solver ran and returned a usable trajectory
    Trajectory trajectory;
    std::vector<double> catch_times;  // optimized, cumulative from plan start
    std::vector<TerminalState> terminals;
    CostBundle bundle;
    SolverReport report;
    Eigen::VectorXd x;  // decision vector at the solution (warm-replan seed)
};

// Full catching pipeline: jerk-penalized primitive for the seed path,
// spline transcription with penalties, quasi-Newton refinement. One plan
// covers all targets in the given order; requested catch times are the
// schedule seed and float freely during the optimization.
class CatchPlanner {
  public:
    explicit CatchPlanner(PlannerConfig cfg = {}) : cfg_(std::move(cfg)) {
        if (cfg_.pieces < 2) throw std::domain_error("planner: need at least two pieces");
        // Surface solver misconfiguration here; solveFrom treats a thrown
        // domain_error as a numeric failure and would mask it as !success.
        validateSolverConfig(cfg_.solver);
    }

    const PlannerConfig& config() const { return cfg_; }

    // Seed the decision vector from the ideal catch pose at the requested
    // times: net axis against the incoming target, thrust at hover scale.
    Eigen::VectorXd seed(const FlatState& start,
                         const std::vector<const TargetPrediction*>& targets,
                         const std::vector<double>& t_catch) const {
        if (targets.empty()) throw std::domain_error("planner: no targets");
        if (targets.size() != t_catch.size())
            throw std::domain_error("planner: one catch time per target");
        const int S = static_cast<int>(targets.size());
        const int M = cfg_.pieces;
        const double g = cfg_.limits.gravity;

        std::vector<Eigen::Matrix3Xd> inner(S);
        std::vector<Eigen::VectorXd> durations(S);
        std::vector<TerminalState> terms(S);

        BoundaryState from{start.pos, start.vel, start.acc};
        double prev_t = 0.0;
        for (int k = 0; k < S; ++k) {
            const double horizon = t_catch[k] - prev_t;
            if (horizon < cfg_.min_horizon)
                throw std::domain_error("planner: catch times must leave room, in order");
            prev_t = t_catch[k];

            const Vec3 v_b = targets[k]->velocity(t_catch[k]);
            const double speed = v_b.norm();
            // Ideal pose: net axis opposes the target's arrival direction;
            // the matching acceleration keeps thrust at hover magnitude.
            const Vec3 z_d = speed > 1e-9 ? Vec3(-v_b / speed) : Vec3::UnitZ();
            TerminalState term;
            term.pos = targets[k]->position(t_catch[k]) - cfg_.limits.net_offset * z_d;
            term.vel = Vec3::Zero();
            term.acc = g * z_d - g * Vec3::UnitZ();
            terms[k] = term;

            const BoundaryState to{term.pos, term.vel, term.acc};
            const PrimitiveSolution prim = solvePrimitive(from, to, horizon);
            const WaypointSeed ws = seedWaypoints(prim, M);
            inner[k].resize(3, M - 1);
            for (int i = 0; i < M - 1; ++i) inner[k].col(i) = ws.waypoints[i];
            durations[k] = Eigen::Map<const Eigen::VectorXd>(ws.durations.data(), M);
            from = to;
        }
        CatchCost cost(start, targets, M, cfg_.weights, cfg_.limits);
        return cost.pack(inner, durations, terms);
    }

    PlanResult plan(const FlatState& start,
                    const std::vector<const TargetPrediction*>& targets,
                    const std::vector<double>& t_catch) const {
        return solveFrom(start, targets, seed(start, targets, t_catch));
    }

    // Warm replan: reuse a previous solution's decision vector, typically
    // with a slightly advanced start state and refreshed target models.
    PlanResult replan(const FlatState& start,
                      const std::vector<const TargetPrediction*>& targets,
                      const Eigen::VectorXd& x_prev) const {
        return solveFrom(start, targets, x_prev);
    }

  private:
    PlanResult solveFrom(const FlatState& start,
                         const std::vector<const TargetPrediction*>& targets,
                         Eigen::VectorXd x0) const {
        PlanResult out;
        CatchCost cost(start, targets, cfg_.pieces, cfg_.weights, cfg_.limits);
        if (x0.size() != cost.dim())
            throw std::domain_error("planner: seed dimension mismatch");
        try {
            auto objective = [&cost](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                return cost.evaluate(x, grad);
            };
            MinimizeResult res = lbfgsMinimize(objective, std::move(x0), cfg_.solver);
            out.report = res.report;
            out.x = std::move(res.x);
        } catch (const std::domain_error&) {
            // Even the seed was not evaluable (e.g. a singular thrust node):
            // report failure with no trajectory.
            out.success = false;
            return out;
        }
        out.trajectory = cost.trajectory(out.x);
        out.bundle = cost.lastBundle();
        out.catch_times = cost.catchTimes(out.x);
        out.terminals.reserve(targets.size());
        for (int k = 0; k < cost.segments(); ++k) out.terminals.push_back(cost.terminalOf(out.x, k));
        out.success = true;
        return out;
    }

    PlannerConfig cfg_;
};

}  // namespace catchplan
