#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>
#include <vector>

#include "catchplan/lbfgs.hpp"
#include "catchplan/rng.hpp"
#include "oracles.hpp"

using namespace catchplan;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Objective quadratic(const MatrixXd& A, const VectorXd& b, double scale = 1.0) {
    return [A, b, scale](const VectorXd& x, VectorXd& g) {
        g = scale * (A * x - b);
        return scale * (0.5 * x.dot(A * x) - b.dot(x));
    };
}

Objective rosenbrock(double scale = 1.0) {
    return [scale](const VectorXd& x, VectorXd& g) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = scale * (-2.0 * a - 400.0 * x(0) * b);
        g(1) = scale * (200.0 * b);
        return scale * (a * a + 100.0 * b * b);
    };
}

}  // namespace

TEST_CASE("strong-Wolfe quasi-Newton solves a 10-D convex quadratic") {
    Rng rng(173205);
    MatrixXd B(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) B(i, j) = rng.normal();
    const MatrixXd A = B.transpose() * B + MatrixXd::Identity(10, 10);
    // Small right-hand side keeps |f*| small, so the line search can certify
    // decrease all the way down to the tight gradient tolerance.
    VectorXd b(10);
    for (int i = 0; i < 10; ++i) b(i) = 0.1 * rng.normal();
    const VectorXd x_star = A.fullPivLu().solve(b);

    SolverConfig cfg;
    cfg.memory = 10;
    cfg.g_tol = 3e-9;
    cfg.f_tol_rel = 1e-16;
    cfg.max_iters = 100;
    std::vector<double> history;
    cfg.on_iterate = [&](int, double f, const VectorXd&) { history.push_back(f); };

    const auto res = lbfgsMinimize(quadratic(A, b), VectorXd::Zero(10), cfg);
    CHECK(res.report.status == SolveStatus::kConverged);
    CHECK(res.report.iterations <= 30);
    CHECK((res.x - x_star).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(res.report.final_cost ==
          doctest::Approx(0.5 * x_star.dot(A * x_star) - b.dot(x_star)).epsilon(1e-12));

    // Accepted iterates decrease strictly.
    for (size_t i = 1; i < history.size(); ++i) CHECK(history[i] < history[i - 1]);
}

TEST_CASE("a stationary starting point returns immediately") {
    MatrixXd A = MatrixXd::Identity(4, 4);
    VectorXd b = VectorXd::Zero(4);
    const auto res = lbfgsMinimize(quadratic(A, b), VectorXd::Zero(4));
    CHECK(res.report.status == SolveStatus::kConverged);
    CHECK(res.report.iterations == 0);
    CHECK(res.report.evaluations == 1);
    CHECK(res.x.norm() == 0.0);
}

TEST_CASE("Rosenbrock valley from the classic start") {
    const auto res = lbfgsMinimize(rosenbrock(), (VectorXd(2) << -1.2, 1.0).finished());
    CHECK(res.report.status == SolveStatus::kConverged);
    CHECK(std::abs(res.x(0) - 1.0) < 1e-6);
    CHECK(std::abs(res.x(1) - 1.0) < 1e-6);
}

TEST_CASE("iterate sequence is invariant to positive objective rescaling") {
    Rng rng(173205);
    MatrixXd B(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) B(i, j) = rng.normal();
    const MatrixXd A = B.transpose() * B + MatrixXd::Identity(10, 10);
    VectorXd b(10);
    for (int i = 0; i < 10; ++i) b(i) = 0.1 * rng.normal();

    for (double scale : {1e-3, 1e6}) {
        std::vector<VectorXd> base, scaled;
        SolverConfig cfg;
        cfg.memory = 10;
        cfg.g_tol = 3e-9;
        cfg.f_tol_rel = 1e-16;
        cfg.on_iterate = [&](int, double, const VectorXd& x) { base.push_back(x); };
        const auto r1 = lbfgsMinimize(quadratic(A, b), VectorXd::Zero(10), cfg);
        // The same problem in rescaled units: the gradient tolerance carries
        // the objective's units, so it scales along.
        SolverConfig cfg2 = cfg;
        cfg2.g_tol = cfg.g_tol * scale;
        cfg2.on_iterate = [&](int, double, const VectorXd& x) { scaled.push_back(x); };
        const auto r2 = lbfgsMinimize(quadratic(A, b, scale), VectorXd::Zero(10), cfg2);

        REQUIRE(base.size() >= 5);
        REQUIRE(base.size() == scaled.size());
        for (size_t i = 0; i < base.size(); ++i) {
            const double denom = std::max(1.0, base[i].lpNorm<Eigen::Infinity>());
            CHECK((base[i] - scaled[i]).lpNorm<Eigen::Infinity>() / denom < 1e-10);
        }
        CHECK((r1.x - r2.x).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("identical inputs give bit-identical outputs") {
    auto run = [] {
        return lbfgsMinimize(rosenbrock(), (VectorXd(2) << -1.2, 1.0).finished());
    };
    const auto a = run();
    const auto b = run();
    CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * 2) == 0);
    CHECK(a.report.iterations == b.report.iterations);
    CHECK(a.report.evaluations == b.report.evaluations);
    CHECK(std::memcmp(&a.report.final_cost, &b.report.final_cost, sizeof(double)) == 0);
}

TEST_CASE("non-finite objective at the start is rejected") {
    Objective nan_obj = [](const VectorXd& x, VectorXd& g) {
        g = VectorXd::Zero(x.size());
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(lbfgsMinimize(nan_obj, VectorXd::Ones(3)), std::domain_error);
}

TEST_CASE("configuration is validated") {
    MatrixXd A = MatrixXd::Identity(2, 2);
    VectorXd b = VectorXd::Ones(2);
    SolverConfig bad;
    bad.memory = 0;
    CHECK_THROWS_AS(lbfgsMinimize(quadratic(A, b), VectorXd::Zero(2), bad), std::domain_error);
    bad = SolverConfig{};
    bad.g_tol = 0.0;
    CHECK_THROWS_AS(lbfgsMinimize(quadratic(A, b), VectorXd::Zero(2), bad), std::domain_error);
    bad = SolverConfig{};
    bad.c1 = 0.95;  // >= c2
    CHECK_THROWS_AS(lbfgsMinimize(quadratic(A, b), VectorXd::Zero(2), bad), std::domain_error);
}

TEST_CASE("domain errors on trial points act as rejections") {
    // The objective only exists on x(0) < 1; the minimum lies beyond the
    // boundary, so the solver walks toward it and stops at its best iterate.
    Objective barrier = [](const VectorXd& x, VectorXd& g) {
        if (x(0) >= 1.0) throw std::domain_error("out of domain");
        g.resize(1);
        g(0) = 2.0 * (x(0) - 5.0);
        return (x(0) - 5.0) * (x(0) - 5.0);
    };
    const auto res = lbfgsMinimize(barrier, VectorXd::Zero(1));
    CHECK(res.x(0) < 1.0);
    CHECK(res.x(0) > 0.0);
    CHECK(std::isfinite(res.report.final_cost));
}

TEST_CASE("hopeless line search reports failure with the best iterate") {
    // Every point except the start is out of domain and the start is not
    // stationary: the bracket collapses and the solver gives up cleanly.
    Objective hostile = [](const VectorXd& x, VectorXd& g) {
        if (x(0) != 0.0) throw std::domain_error("nowhere to go");
        g.resize(1);
        g(0) = 1.0;
        return 1.0;
    };
    const auto res = lbfgsMinimize(hostile, VectorXd::Zero(1));
    CHECK(res.report.status == SolveStatus::kLineSearchFailed);
    CHECK(res.x(0) == 0.0);
    CHECK(res.report.final_cost == 1.0);
    CHECK(res.report.iterations == 0);
}
