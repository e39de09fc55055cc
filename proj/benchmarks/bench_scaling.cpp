// Asserts the spline construction scales linearly in the piece count M:
// per-piece time must not grow by more than 1.5x per doubling of M, and the
// raw time ratio per doubling must stay far below the cubic dense-solve
// signature. Exits nonzero on violation.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <vector>

#include "catchplan/minco.hpp"
#include "catchplan/rng.hpp"

using namespace catchplan;

namespace {

double medianConstructSeconds(int M, int reps) {
    Rng rng(42 + M);
    Eigen::Matrix<double, 3, 4> head = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Matrix<double, 3, 4> tail = Eigen::Matrix<double, 3, 4>::Zero();
    tail(0, 0) = 1.0 * M;
    MincoSnap minco;
    minco.setConditions(head, tail, M);
    Eigen::Matrix3Xd inner(3, M - 1);
    for (int i = 0; i < M - 1; ++i)
        inner.col(i) = Vec3(i + 1.0, rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXd ts = Eigen::VectorXd::Constant(M, 0.7);

    std::vector<double> samples;
    samples.reserve(reps);
    volatile double sink = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        minco.setParameters(inner, ts);
        sink += minco.getEnergy();
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    (void)sink;
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

}  // namespace

int main() {
    const int sizes[] = {8, 16, 32, 64};
    double times[4];
    // Warm-up pass stabilizes allocator and cache state.
    for (int i = 0; i < 4; ++i) medianConstructSeconds(sizes[i], 50);
    for (int i = 0; i < 4; ++i) times[i] = medianConstructSeconds(sizes[i], 400);

    bool ok = true;
    for (int i = 0; i + 1 < 4; ++i) {
        const double raw_ratio = times[i + 1] / times[i];
        const double per_piece_ratio = raw_ratio / 2.0;
        std::printf("M %2d -> %2d: raw x%.2f, per-piece x%.2f (t = %.1f us -> %.1f us)\n",
                    sizes[i], sizes[i + 1], raw_ratio, per_piece_ratio, times[i] * 1e6,
                    times[i + 1] * 1e6);
        if (per_piece_ratio > 1.5 || raw_ratio > 3.0) ok = false;
    }
    std::printf("construct scaling: %s\n", ok ? "LINEAR" : "SUPERLINEAR");
    return ok ? 0 : 1;
}
