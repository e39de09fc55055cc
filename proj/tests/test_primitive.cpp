#include <doctest.h>

#include "catchplan/primitive.hpp"
#include "catchplan/rng.hpp"
#include "oracles.hpp"

using namespace catchplan;

namespace {

BoundaryState randomState(Rng& rng, double scale) {
    BoundaryState s;
    s.pos = scale * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    s.vel = scale * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    s.acc = scale * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    return s;
}

// Minimum of (1/T) int ||jerk||^2 over degree-9 polynomials meeting the six
// boundary conditions, solved densely per axis.
double oracleCost(const BoundaryState& from, const BoundaryState& to, double T) {
    const Eigen::MatrixXd G = oracles::derivGram(10, 3, T);
    Eigen::MatrixXd A(6, 10);
    A.row(0) = oracles::basisRow(10, 0, 0.0);
    A.row(1) = oracles::basisRow(10, 1, 0.0);
    A.row(2) = oracles::basisRow(10, 2, 0.0);
    A.row(3) = oracles::basisRow(10, 0, T);
    A.row(4) = oracles::basisRow(10, 1, T);
    A.row(5) = oracles::basisRow(10, 2, T);
    double total = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::VectorXd b(6);
        b << from.pos[axis], from.vel[axis], from.acc[axis], to.pos[axis], to.vel[axis],
            to.acc[axis];
        total += oracles::minimizeQuadraticEq(G, A, b).objective;
    }
    return total / T;
}

}  // namespace

TEST_CASE("quintic reproduces both boundary states exactly") {
    Rng rng(41);
    for (int k = 0; k < 20; ++k) {
        const BoundaryState from = randomState(rng, 2.0), to = randomState(rng, 2.0);
        const double T = rng.uniform(0.4, 3.0);
        const PrimitiveSolution s = solvePrimitive(from, to, T);
        CHECK((s.position(0.0) - from.pos).norm() < 1e-12);
        CHECK((s.velocity(0.0) - from.vel).norm() < 1e-12);
        CHECK((s.acceleration(0.0) - from.acc).norm() < 1e-12);
        CHECK((s.position(T) - to.pos).norm() < 1e-9);
        CHECK((s.velocity(T) - to.vel).norm() < 1e-9);
        CHECK((s.acceleration(T) - to.acc).norm() < 1e-9);
    }
}

TEST_CASE("rest-to-rest unit displacement over unit time costs exactly 720") {
    BoundaryState from, to;
    to.pos = Vec3(1, 0, 0);
    const PrimitiveSolution s = solvePrimitive(from, to, 1.0);
    CHECK(primitiveCost(s) == doctest::Approx(720.0).epsilon(1e-12));
    // Its midpoint is the s-curve midpoint.
    CHECK((s.position(0.5) - Vec3(0.5, 0, 0)).norm() < 1e-12);
}

TEST_CASE("cost equals time-normalized quadrature of squared jerk") {
    Rng rng(42);
    for (int k = 0; k < 10; ++k) {
        const BoundaryState from = randomState(rng, 1.5), to = randomState(rng, 1.5);
        const double T = rng.uniform(0.5, 2.5);
        const PrimitiveSolution s = solvePrimitive(from, to, T);
        const double quad = oracles::trapezoid(
            [&](double t) { return s.jerk(t).squaredNorm(); }, 0.0, T, 20000);
        CHECK(primitiveCost(s) == doctest::Approx(quad / T).epsilon(1e-7));
    }
}

TEST_CASE("quintic attains the degree-9 constrained minimum") {
    Rng rng(43);
    for (int k = 0; k < 25; ++k) {
        const BoundaryState from = randomState(rng, 2.0), to = randomState(rng, 2.0);
        const double T = rng.uniform(0.4, 2.5);
        const PrimitiveSolution s = solvePrimitive(from, to, T);
        const double ours = primitiveCost(s);
        const double best = oracleCost(from, to, T);
        CHECK(ours == doctest::Approx(best).epsilon(1e-6));
    }
}

TEST_CASE("rest-to-rest cost scales as 1/T^6") {
    BoundaryState from, to;
    to.pos = Vec3(0, 2, 0);
    const double c1 = primitiveCost(solvePrimitive(from, to, 1.0));
    const double c2 = primitiveCost(solvePrimitive(from, to, 2.0));
    CHECK(c2 == doctest::Approx(c1 / 64.0).epsilon(1e-12));
}

TEST_CASE("non-positive duration is rejected") {
    BoundaryState a, b;
    CHECK_THROWS_AS(solvePrimitive(a, b, 0.0), std::domain_error);
    CHECK_THROWS_AS(solvePrimitive(a, b, -1.0), std::domain_error);
}

TEST_CASE("waypoint seeding samples the primitive at uniform fractions") {
    Rng rng(44);
    const BoundaryState from = randomState(rng, 1.0), to = randomState(rng, 1.0);
    const PrimitiveSolution s = solvePrimitive(from, to, 1.8);

    const WaypointSeed one = seedWaypoints(s, 1);
    CHECK(one.waypoints.empty());
    CHECK(one.durations.size() == 1);
    CHECK(one.durations[0] == doctest::Approx(1.8));

    const WaypointSeed four = seedWaypoints(s, 4);
    CHECK(four.waypoints.size() == 3);
    CHECK(four.durations.size() == 4);
    for (int j = 0; j < 3; ++j)
        CHECK((four.waypoints[j] - s.position((j + 1) * 0.45)).norm() < 1e-12);

    BoundaryState rest_from, rest_to;
    rest_to.pos = Vec3(1, 0, 0);
    const WaypointSeed mid = seedWaypoints(solvePrimitive(rest_from, rest_to, 1.0), 2);
    CHECK((mid.waypoints[0] - Vec3(0.5, 0, 0)).norm() < 1e-12);
}

TEST_CASE("piece conversion preserves the polynomial") {
    Rng rng(45);
    const BoundaryState from = randomState(rng, 1.0), to = randomState(rng, 1.0);
    const PrimitiveSolution s = solvePrimitive(from, to, 1.2);
    const Piece p = s.asPiece();
    for (double t : {0.0, 0.3, 0.9, 1.2}) {
        CHECK((p.eval(t, 0) - s.position(t)).norm() < 1e-12);
        CHECK((p.eval(t, 3) - s.jerk(t)).norm() < 1e-11);
    }
}
