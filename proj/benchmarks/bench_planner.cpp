// google-benchmark microbenchmarks for the hot paths: spline construction,
// gradient pullback, and flatness evaluation. Latency acceptance thresholds
// live in the acceptance suite; these are for profiling.

#include <benchmark/benchmark.h>

#include "catchplan/flatness.hpp"
#include "catchplan/minco.hpp"
#include "catchplan/rng.hpp"

using namespace catchplan;

static void BM_MincoConstruct(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    Rng rng(7);
    Eigen::Matrix<double, 3, 4> head = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Matrix<double, 3, 4> tail = Eigen::Matrix<double, 3, 4>::Zero();
    tail(0, 0) = M;
    MincoSnap minco;
    minco.setConditions(head, tail, M);
    Eigen::Matrix3Xd inner(3, M - 1);
    for (int i = 0; i < M - 1; ++i)
        inner.col(i) = Vec3(i + 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXd ts = Eigen::VectorXd::Constant(M, 0.7);
    for (auto _ : state) {
        minco.setParameters(inner, ts);
        benchmark::DoNotOptimize(minco.getEnergy());
    }
}
BENCHMARK(BM_MincoConstruct)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

static void BM_MincoGradientPullback(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    Eigen::Matrix<double, 3, 4> head = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Matrix<double, 3, 4> tail = Eigen::Matrix<double, 3, 4>::Zero();
    tail(0, 0) = M;
    MincoSnap minco;
    minco.setConditions(head, tail, M);
    Eigen::Matrix3Xd inner(3, M - 1);
    for (int i = 0; i < M - 1; ++i) inner.col(i) = Vec3(i + 1.0, 0.1 * i, -0.1 * i);
    Eigen::VectorXd ts = Eigen::VectorXd::Constant(M, 0.7);
    minco.setParameters(inner, ts);
    Eigen::MatrixX3d gdC = Eigen::MatrixX3d::Zero(8 * M, 3);
    Eigen::VectorXd gdT = Eigen::VectorXd::Zero(M);
    minco.addEnergyGradByCoeffs(gdC);
    minco.addEnergyGradByTimes(gdT);
    Eigen::Matrix3Xd gp;
    Eigen::VectorXd gt;
    for (auto _ : state) {
        minco.propagateGrad(gdC, gdT, gp, gt);
        benchmark::DoNotOptimize(gt.sum());
    }
}
BENCHMARK(BM_MincoGradientPullback)->Arg(8)->Arg(16)->Arg(32);

static void BM_FlatMap(benchmark::State& state) {
    Rng rng(3);
    Vec3 acc(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vec3 jerk(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
    for (auto _ : state) {
        benchmark::DoNotOptimize(flatMap(acc, jerk));
    }
}
BENCHMARK(BM_FlatMap);

BENCHMARK_MAIN();
