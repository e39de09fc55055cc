#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <vector>

#include "catchplan/flatness.hpp"
#include "catchplan/planner.hpp"
#include "catchplan/target_model.hpp"

using namespace catchplan;
using Eigen::VectorXd;

namespace {

// Hover start and a single ballistic throw toward the quad: the recurring
// single-target fixture (throw from (4,0,0.8), apex ~3.4 m, reachable well
// inside two seconds).
struct Fixture {
    FlatState start;
    TargetModel ball;
    Fixture() {
        start.pos = Vec3(1.2, 0, 1.4);
        ball.s0 = Vec3(4, 0, 0.8);
        ball.v0 = Vec3(-2.5, 0, 7.2);
    }
};

// Second throw launched 0.6 s later from the opposite side.
TargetModel secondBall() {
    TargetModel b;
    b.t0 = 0.6;
    b.s0 = Vec3(-3, 1, 0.9);
    b.v0 = Vec3(2.2, -0.5, 7.5);
    return b;
}

double catchOffset(const PlanResult& r, int k, const TargetPrediction& target,
                   const Limits& lim) {
    const TerminalState& term = r.terminals[k];
    const Vec3 z_d = term.netAxis(lim.gravity);
    return (netCenter(term.pos, z_d, lim.net_offset) - target.position(r.catch_times[k]))
        .norm();
}

double catchAngle(const PlanResult& r, int k, const TargetPrediction& target,
                  const Limits& lim) {
    const TerminalState& term = r.terminals[k];
    const Vec3 z_d = term.netAxis(lim.gravity);
    const Vec3 u_t = target.velocity(r.catch_times[k]).normalized();
    return std::acos(std::clamp((-u_t).dot(z_d), -1.0, 1.0));
}

}  // namespace

TEST_CASE("seed places every terminal at the ideal catch pose") {
    Fixture fx;
    TargetModel b2 = secondBall();
    CatchPlanner planner;
    const Limits& lim = planner.config().limits;
    const std::vector<const TargetPrediction*> targets{&fx.ball, &b2};
    const std::vector<double> t_req{1.3, 2.05};

    const VectorXd x0 = planner.seed(fx.start, targets, t_req);
    CHECK(x0.allFinite());

    CatchCost cost(fx.start, targets, planner.config().pieces, planner.config().weights, lim);
    REQUIRE(x0.size() == cost.dim());
    for (int k = 0; k < 2; ++k) {
        const TerminalState term = cost.terminalOf(x0, k);
        const Vec3 z_d = term.netAxis(lim.gravity);
        // Net center exactly on the target, net axis exactly against its
        // arrival direction, thrust at hover magnitude.
        CHECK((netCenter(term.pos, z_d, lim.net_offset) - targets[k]->position(t_req[k]))
                  .norm() < 1e-12);
        const Vec3 u_t = targets[k]->velocity(t_req[k]).normalized();
        CHECK((z_d + u_t).norm() < 1e-12);
        CHECK((term.acc + Vec3(0, 0, lim.gravity)).norm() ==
              doctest::Approx(lim.gravity).epsilon(1e-12));
        CHECK(term.vel.norm() == 0.0);
        // Both terminal hinges start in their zero branch.
        CHECK(terminalPositionPenalty(term, *targets[k], t_req[k], 0.105, lim.net_offset)
                  .value == 0.0);
        CHECK(terminalAnglePenalty(term, *targets[k], t_req[k], 0.02,
                                   planner.config().weights.theta_safe)
                  .value == 0.0);
        // Uniform duration split of each segment's allowance.
        const VectorXd ts = cost.durationsOf(x0, k);
        const double horizon = t_req[k] - (k == 0 ? 0.0 : t_req[k - 1]);
        for (int i = 0; i < ts.size(); ++i)
            CHECK(ts(i) == doctest::Approx(horizon / planner.config().pieces).epsilon(1e-12));
    }
}

TEST_CASE("cost decreases monotonically through the first fifty iterations") {
    Fixture fx;
    std::vector<double> history;
    PlannerConfig cfg;
    cfg.solver.on_iterate = [&history](int, double f, const VectorXd&) {
        history.push_back(f);
    };
    CatchPlanner planner(cfg);
    const PlanResult r = planner.plan(fx.start, {&fx.ball}, {1.3});
    REQUIRE(r.success);
    REQUIRE(history.size() >= 51);
    for (int i = 1; i <= 50; ++i) CHECK(history[i] < history[i - 1]);
}

TEST_CASE("single-target plan converges to a catchable terminal") {
    Fixture fx;
    CatchPlanner planner;
    const Limits& lim = planner.config().limits;
    const PlanResult r = planner.plan(fx.start, {&fx.ball}, {1.3});

    REQUIRE(r.success);
    CHECK(r.report.status == SolveStatus::kConverged);
    CHECK(r.report.final_cost < 100.0);
    REQUIRE(r.catch_times.size() == 1);
    CHECK(r.catch_times[0] > 1.0);
    CHECK(r.catch_times[0] < 1.8);
    CHECK(r.trajectory.totalDuration() == doctest::Approx(r.catch_times[0]).epsilon(1e-12));

    // Catch geometry: net-center offset inside the envelope, approach angle
    // inside the hard cone (the penalized cone is tighter on purpose).
    CHECK(catchOffset(r, 0, fx.ball, lim) < lim.r_net - lim.r_ball);
    CHECK(catchAngle(r, 0, fx.ball, lim) < lim.theta_max);

    // Sampled dynamic feasibility with 2% slack (penalties are soft).
    const double total = r.trajectory.totalDuration();
    for (int i = 0; i <= 600; ++i) {
        const double t = total * i / 600.0;
        const FlatState s = r.trajectory.state(t);
        const FlatOutputs fo = flatMap(s.acc, s.jerk, lim.gravity);
        CHECK(s.vel.norm() <= lim.v_max * 1.02);
        CHECK(fo.thrust <= lim.f_max * 1.02);
        CHECK(fo.thrust >= lim.f_min * 0.98);
        CHECK(fo.omega_xy.norm() <= lim.omega_max * 1.02);
        CHECK(s.pos.z() >= lim.z_min * 0.98);
    }
}

TEST_CASE("two-target plan catches both in sequence") {
    Fixture fx;
    TargetModel b2 = secondBall();
    PlannerConfig cfg;
    cfg.solver.max_iters = 5000;
    cfg.solver.f_tol_rel = 1e-9;  // push through the mid-descent plateau
    CatchPlanner planner(cfg);
    const Limits& lim = planner.config().limits;

    const PlanResult r = planner.plan(fx.start, {&fx.ball, &b2}, {1.3, 2.05});
    REQUIRE(r.success);
    REQUIRE(r.catch_times.size() == 2);
    CHECK(r.catch_times[0] < r.catch_times[1]);
    CHECK(r.catch_times[1] - r.catch_times[0] > 0.3);
    CHECK(r.trajectory.totalDuration() == doctest::Approx(r.catch_times[1]).epsilon(1e-12));

    for (int k = 0; k < 2; ++k) {
        const TargetPrediction& tgt = k ? static_cast<TargetPrediction&>(b2) : fx.ball;
        CHECK(catchOffset(r, k, tgt, lim) <= lim.r_net - lim.r_ball);
        CHECK(catchAngle(r, k, tgt, lim) <= lim.theta_max);
    }
}

TEST_CASE("warm replan is much cheaper and stays consistent") {
    Fixture fx;
    CatchPlanner planner;
    const Limits& lim = planner.config().limits;
    const PlanResult cold = planner.plan(fx.start, {&fx.ball}, {1.3});
    REQUIRE(cold.success);

    // One control tick later: start from the flown state, re-anchor the
    // target model to the new plan clock.
    const double dt = 0.02;
    const FlatState moved = cold.trajectory.state(dt);
    TargetModel shifted = fx.ball;
    shifted.t0 -= dt;

    const PlanResult warm = planner.replan(moved, {&shifted}, cold.x);
    REQUIRE(warm.success);
    CHECK(warm.report.evaluations * 2 < cold.report.evaluations);
    CHECK(std::abs(warm.catch_times[0] - (cold.catch_times[0] - dt)) < 0.05);
    CHECK(catchOffset(warm, 0, shifted, lim) < lim.r_net - lim.r_ball);
    CHECK(catchAngle(warm, 0, shifted, lim) < lim.theta_max);
}

TEST_CASE("planning is deterministic") {
    Fixture fx;
    CatchPlanner planner;
    const PlanResult a = planner.plan(fx.start, {&fx.ball}, {1.3});
    const PlanResult b = planner.plan(fx.start, {&fx.ball}, {1.3});
    REQUIRE(a.success);
    REQUIRE(b.success);
    REQUIRE(a.x.size() == b.x.size());
    CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * a.x.size()) == 0);
    CHECK(a.report.final_cost == b.report.final_cost);
    CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("malformed requests are rejected") {
    Fixture fx;
    TargetModel b2 = secondBall();
    CatchPlanner planner;

    CHECK_THROWS_AS((void)planner.plan(fx.start, {}, {}), std::domain_error);
    CHECK_THROWS_AS((void)planner.plan(fx.start, {&fx.ball}, {1.0, 2.0}), std::domain_error);
    // Times must be spaced in catch order.
    CHECK_THROWS_AS((void)planner.plan(fx.start, {&fx.ball, &b2}, {2.0, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS((void)planner.plan(fx.start, {&fx.ball, &b2}, {1.0, 1.01}),
                    std::domain_error);

    // Warm seed of the wrong dimension.
    const PlanResult one = planner.plan(fx.start, {&fx.ball}, {1.3});
    REQUIRE(one.success);
    CHECK_THROWS_AS((void)planner.replan(fx.start, {&fx.ball, &b2}, one.x),
                    std::domain_error);

    PlannerConfig bad;
    bad.pieces = 1;
    CHECK_THROWS_AS(CatchPlanner{bad}, std::domain_error);

    // Solver misconfiguration must surface at construction, not be masked as
    // a failed plan later on.
    PlannerConfig loose;
    loose.solver.f_tol_rel = 0.0;
    CHECK_THROWS_AS(CatchPlanner{loose}, std::domain_error);
    PlannerConfig wolfe;
    wolfe.solver.c1 = 0.5;
    wolfe.solver.c2 = 0.1;
    CHECK_THROWS_AS(CatchPlanner{wolfe}, std::domain_error);
}

TEST_CASE("an unreachable request degrades without crashing") {
    Fixture fx;
    TargetModel runaway;
    runaway.s0 = Vec3(40, 0, 30);
    runaway.v0 = Vec3(9, 0, 9);
    CatchPlanner planner;
    PlanResult r;
    CHECK_NOTHROW(r = planner.plan(fx.start, {&runaway}, {0.4}));
    if (r.success) CHECK(std::isfinite(r.report.final_cost));
}
