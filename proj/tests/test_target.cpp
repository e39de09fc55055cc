#include <doctest.h>

#include "catchplan/drag_fit.hpp"
#include "catchplan/ekf.hpp"
#include "catchplan/estimator.hpp"
#include "catchplan/rng.hpp"
#include "catchplan/target_model.hpp"
#include "oracles.hpp"

using namespace catchplan;

namespace {

TargetModel sampleModel(Rng& rng, double k_lo = 0.0, double k_hi = 1.5) {
    TargetModel m;
    m.t0 = 0.0;
    m.s0 = Vec3(rng.uniform(-2, 5), rng.uniform(-2, 2), rng.uniform(0.5, 3));
    m.v0 = Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(2, 8));
    m.drag = Vec3(rng.uniform(k_lo, k_hi), rng.uniform(k_lo, k_hi), rng.uniform(k_lo, k_hi));
    return m;
}

Eigen::VectorXd dragOde(const TargetModel& m, double, const Eigen::VectorXd& x) {
    Eigen::VectorXd dx(6);
    dx.head<3>() = x.tail<3>();
    dx.tail<3>() = m.gravityVec() - m.drag.cwiseProduct(x.tail<3>()).eval();
    return dx;
}

}  // namespace

TEST_CASE("closed-form ballistic prediction matches RK4 to 1e-8") {
    Rng rng(31);
    for (int k = 0; k < 10; ++k) {
        const TargetModel m = sampleModel(rng);
        Eigen::VectorXd x0(6);
        x0 << m.s0, m.v0;
        const Eigen::VectorXd xf = oracles::rk4(
            [&](double t, const Eigen::VectorXd& x) { return dragOde(m, t, x); }, x0, 0.0, 1.7,
            1e-4);
        CHECK((m.positionAt(1.7) - xf.head<3>()).norm() < 1e-8);
        CHECK((m.velocityAt(1.7) - xf.tail<3>()).norm() < 1e-8);
    }
}

TEST_CASE("zero drag reduces exactly to the parabola") {
    TargetModel m;
    m.s0 = Vec3(1, 2, 3);
    m.v0 = Vec3(3, -1, 5);
    m.drag.setZero();
    const double tau = 1.3;
    const Vec3 expect = m.s0 + m.v0 * tau + 0.5 * tau * tau * Vec3(0, 0, -9.81);
    CHECK((m.positionAt(tau) - expect).norm() < 1e-12);
    CHECK((m.velocityAt(tau) - (m.v0 + tau * Vec3(0, 0, -9.81))).norm() < 1e-12);
}

TEST_CASE("prediction is continuous through vanishing drag") {
    TargetModel a, b;
    a.s0 = b.s0 = Vec3(0, 0, 2);
    a.v0 = b.v0 = Vec3(3, 1, 6);
    a.drag = Vec3::Constant(1e-8);
    b.drag = Vec3::Constant(1e-4);
    // Both must stay within o(K) of the drag-free parabola.
    TargetModel free = a;
    free.drag.setZero();
    CHECK((a.positionAt(1.5) - free.positionAt(1.5)).norm() < 1e-7);
    CHECK((b.positionAt(1.5) - free.positionAt(1.5)).norm() < 1e-3);
    CHECK((a.positionAt(1.5) - free.positionAt(1.5)).norm() <
          (b.positionAt(1.5) - free.positionAt(1.5)).norm());
}

TEST_CASE("velocity is the time derivative of position; acceleration obeys the drag law") {
    Rng rng(32);
    const TargetModel m = sampleModel(rng);
    const double h = 1e-6;
    for (double tau : {0.1, 0.8, 1.9}) {
        const Vec3 fd = (m.positionAt(tau + h) - m.positionAt(tau - h)) / (2 * h);
        CHECK((fd - m.velocityAt(tau)).norm() < 1e-6);
        const Vec3 want = m.gravityVec() - m.drag.cwiseProduct(m.velocityAt(tau)).eval();
        CHECK((m.accelerationAt(tau) - want).norm() < 1e-12);
    }
}

TEST_CASE("prediction before the anchor time is rejected") {
    TargetModel m;
    CHECK_THROWS_AS(m.positionAt(-0.5), std::domain_error);
    CHECK_NOTHROW(m.positionAt(0.0));
}

TEST_CASE("filter with exact model and tiny noise locks onto the true velocity") {
    Rng rng(33);
    TargetModel truth = sampleModel(rng, 0.1, 0.4);
    EkfParams prm;
    prm.r_meas = 1e-4;
    EkfState s;
    s.x.head<3>() = truth.positionAt(0.0);
    s.x.tail<3>().setZero();
    s.P.bottomRightCorner<3, 3>() *= 25.0;
    const double dt = 0.01;
    for (int i = 1; i <= 120; ++i) {
        const Vec3 z = truth.positionAt(i * dt) +
                       1e-4 * Vec3(rng.normal(), rng.normal(), rng.normal());
        ekfStep(s, truth.drag, dt, z, prm);
    }
    CHECK((s.vel() - truth.velocityAt(1.2)).norm() < 0.05);
    CHECK((s.pos() - truth.positionAt(1.2)).norm() < 0.01);
}

TEST_CASE("vanishing measurement noise snaps the position estimate to the measurement") {
    EkfParams prm;
    prm.r_meas = 0.0;
    EkfState s;
    s.x << 1, 2, 3, 0.5, 0.5, 0.5;
    const Vec3 z(4, 5, 6);
    ekfUpdate(s, z, prm);
    CHECK((s.pos() - z).norm() < 1e-9);
}

TEST_CASE("zero-dt zero-noise prediction is the identity on the mean") {
    EkfParams prm;
    prm.q_pos = 0.0;
    prm.q_vel = 0.0;
    EkfState s;
    s.x << 1, 2, 3, 4, 5, 6;
    const Vec6 before = s.x;
    ekfPredict(s, Vec3(0.3, 0.3, 0.3), 0.0, prm);
    CHECK((s.x - before).norm() == 0.0);
}

TEST_CASE("covariance stays symmetric positive semidefinite across random filtering") {
    Rng rng(34);
    EkfParams prm;
    EkfState s;
    for (int i = 0; i < 1000; ++i) {
        const double dt = rng.uniform(0.001, 0.05);
        ekfPredict(s, Vec3(0.2, 0.1, 0.3), dt, prm);
        if (rng.uniform01() < 0.7)
            ekfUpdate(s, Vec3(rng.normal(), rng.normal(), rng.normal()), prm);
        CHECK((s.P - s.P.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::SelfAdjointEigenSolver<Mat6> es(s.P);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("noise-free mean propagation follows the stated discrete transition") {
    // The transition's position row is deliberately first-order (pos +=
    // vel*dt with the pre-step velocity); the velocity row is the exact
    // exponential. Verify the filter reproduces that recursion bit-for-bit
    // and that its drift from the continuous model is the expected
    // 0.5*g*dt^2 per step.
    TargetModel truth;
    truth.s0 = Vec3(1, 1, 3);
    truth.v0 = Vec3(2, -1, 4);
    truth.drag = Vec3(0.2, 0.0, 0.4);
    EkfParams prm;
    prm.q_pos = prm.q_vel = 0.0;
    EkfState s;
    s.x << truth.s0, truth.v0;
    const double dt = 0.01;
    Vec3 pos = truth.s0, vel = truth.v0;
    const Vec3 g(0, 0, -9.81);
    for (int i = 0; i < 100; ++i) {
        ekfPredict(s, truth.drag, dt, prm);
        const Vec3 vel_next =
            (vel.array() * (-truth.drag.array() * dt).exp()).matrix() +
            Vec3(g[0] * dt * dragPhi(truth.drag[0] * dt), g[1] * dt * dragPhi(truth.drag[1] * dt),
                 g[2] * dt * dragPhi(truth.drag[2] * dt));
        pos += vel * dt;
        vel = vel_next;
    }
    CHECK((s.pos() - pos).norm() < 1e-12);
    CHECK((s.vel() - vel).norm() < 1e-12);
    // Velocity is exact; position drift is the documented first-order bias.
    CHECK((s.vel() - truth.velocityAt(1.0)).norm() < 1e-12);
    CHECK((s.pos() - truth.positionAt(1.0)).norm() ==
          doctest::Approx(0.5 * 9.81 * dt * dt * 100).epsilon(0.1));
}

TEST_CASE("drag fit recovers the coefficients exactly from noiseless samples") {
    TargetModel truth;
    truth.s0 = Vec3(4, 0, 2.1);
    truth.v0 = Vec3(-3, 2, 7);
    truth.drag = Vec3(0.3, 0.3, 0.3);
    FitWindow w(30);
    for (int i = 0; i < 30; ++i) w.push(i * 0.01, truth.positionAt(i * 0.01));
    const TargetModel fit = fitDrag(w);
    CHECK((fit.drag - truth.drag).norm() < 1e-6);
    // Re-anchored state matches the truth at the window end.
    CHECK((fit.s0 - truth.positionAt(0.29)).norm() < 1e-8);
    CHECK((fit.v0 - truth.velocityAt(0.29)).norm() < 1e-6);
    CHECK(fit.t0 == doctest::Approx(0.29));
}

TEST_CASE("drag fit clamps to the configured ceiling") {
    TargetModel truth;
    truth.s0 = Vec3(0, 0, 3);
    truth.v0 = Vec3(5, 4, 6);
    truth.drag = Vec3(3.5, 3.5, 3.5);  // beyond k_max
    FitWindow w(30);
    for (int i = 0; i < 30; ++i) w.push(i * 0.01, truth.positionAt(i * 0.01));
    DragFitParams prm;
    const TargetModel fit = fitDrag(w, prm);
    CHECK(fit.drag.maxCoeff() <= prm.k_max + 1e-12);
}

TEST_CASE("drag fit refuses windows that are too small or too short") {
    FitWindow w(30);
    TargetModel truth;
    truth.v0 = Vec3(1, 1, 5);
    for (int i = 0; i < 5; ++i) w.push(i * 0.01, truth.positionAt(i * 0.01));
    CHECK_THROWS_AS(fitDrag(w), InsufficientDataError);
    FitWindow w2(30);
    for (int i = 0; i < 12; ++i) w2.push(i * 0.005, truth.positionAt(i * 0.005));
    CHECK_THROWS_AS(fitDrag(w2), InsufficientDataError);  // span 0.055 < 0.1
}

TEST_CASE("fit window enforces strictly increasing timestamps") {
    FitWindow w(10);
    w.push(0.0, Vec3::Zero());
    CHECK_THROWS_AS(w.push(0.0, Vec3::Zero()), std::domain_error);
    CHECK_THROWS_AS(w.push(-0.1, Vec3::Zero()), std::domain_error);
    w.push(0.01, Vec3::Zero());
    CHECK(w.size() == 2);
}

TEST_CASE("sensing gate: no output below, filter-only above, full model past the apex gate") {
    TargetModel truth;
    truth.s0 = Vec3(4, 0, 0.8);
    truth.v0 = Vec3(-3, 1.5, 7.5);  // motion on every axis keeps K identifiable
    truth.drag = Vec3(0.25, 0.25, 0.25);

    TargetEstimator est;
    CHECK(est.stage() == SensingStage::None);

    // Below the 2.0 m gate: nothing published.
    auto out = est.feed(0.0, truth.positionAt(0.0));
    CHECK(!out.has_value());
    CHECK(est.stage() == SensingStage::None);

    // Walk the ball upward; the filter starts at the first sample above 2 m.
    double t = 0.0;
    while (est.stage() == SensingStage::None) {
        t += 0.01;
        out = est.feed(t, truth.positionAt(t));
    }
    CHECK(est.stage() == SensingStage::FilterOnly);
    CHECK(out.has_value());
    CHECK(out->drag.norm() == 0.0);  // default coefficients before the fit
    CHECK(truth.positionAt(t).z() >= 2.0);

    // Keep feeding until the 2.8 m gate: drag gets fitted.
    while (est.stage() == SensingStage::FilterOnly) {
        t += 0.01;
        out = est.feed(t, truth.positionAt(t));
    }
    CHECK(est.stage() == SensingStage::FullModel);
    CHECK(truth.positionAt(t).z() >= 2.8);
    for (int i = 0; i < 25; ++i) {
        t += 0.01;
        out = est.feed(t, truth.positionAt(t));
    }
    REQUIRE(out.has_value());
    CHECK((out->drag - truth.drag).norm() < 0.05);
    CHECK((out->s0 - truth.positionAt(t)).norm() < 0.01);

    // The stage latches even when the ball falls back below the gates.
    while (truth.positionAt(t).z() > 1.5) t += 0.01;
    out = est.feed(t, truth.positionAt(t));
    CHECK(est.stage() == SensingStage::FullModel);
    CHECK(out.has_value());
}
