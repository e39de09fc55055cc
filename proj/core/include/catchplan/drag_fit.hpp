#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <deque>
#include <limits>

#include "catchplan/target_model.hpp"
#include "catchplan/types.hpp"

namespace catchplan {

// Sliding window of timestamped position observations for the drag fit.
class FitWindow {
  public:
    explicit FitWindow(int capacity = 30) : capacity_(capacity) {}

    void push(double t, const Vec3& pos) {
        if (!samples_.empty() && t <= samples_.back().t)
            throw std::domain_error("FitWindow: timestamps must be strictly increasing");
        samples_.push_back({t, pos});
        while (static_cast<int>(samples_.size()) > capacity_) samples_.pop_front();
    }

    int size() const { return static_cast<int>(samples_.size()); }
    double span() const {
        return samples_.empty() ? 0.0 : samples_.back().t - samples_.front().t;
    }
    double timeAt(int i) const { return samples_[i].t; }
    const Vec3& posAt(int i) const { return samples_[i].pos; }

  private:
    struct Sample {
        double t;
        Vec3 pos;
    };
    int capacity_;
    std::deque<Sample> samples_;
};

struct DragFitParams {
    int min_samples = 8;
    double min_span = 0.1;   // seconds
    double k_max = 2.0;      // upper clamp on the per-axis coefficient
    int max_iters = 20;
    double tol = 1e-10;
    double gravity = 9.81;
};

// Per-axis drag estimation: for each axis, Gauss-Newton on K with the linear
// parameters (s0, v0) profiled out exactly at every step (separable least
// squares), step-halving to keep the SSE non-increasing, K clamped to
// [0, k_max]. The fitted model is anchored at the last sample's timestamp.
inline TargetModel fitDrag(const FitWindow& w, const DragFitParams& prm = {}) {
    if (w.size() < prm.min_samples || w.span() < prm.min_span)
        throw InsufficientDataError("fitDrag: window too small to identify drag");

    const int n = w.size();
    const double t_ref = w.timeAt(0);
    const Vec3 g(0.0, 0.0, -prm.gravity);

    TargetModel model;
    model.gravity = prm.gravity;

    for (int axis = 0; axis < 3; ++axis) {
        // Profiled SSE and linear parameters for a candidate K.
        auto profile = [&](double K, double& s0, double& v0) {
            double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
            for (int i = 0; i < n; ++i) {
                const double tau = w.timeAt(i) - t_ref;
                const double x = K * tau;
                const double c = tau * dragPhi(x);
                const double d = w.posAt(i)[axis] - g[axis] * tau * tau * dragPsi(x);
                a11 += 1.0;
                a12 += c;
                a22 += c * c;
                b1 += d;
                b2 += c * d;
            }
            const double det = a11 * a22 - a12 * a12;
            if (std::abs(det) < 1e-14) {
                s0 = b1 / a11;
                v0 = 0.0;
            } else {
                s0 = (a22 * b1 - a12 * b2) / det;
                v0 = (a11 * b2 - a12 * b1) / det;
            }
            double sse = 0.0;
            for (int i = 0; i < n; ++i) {
                const double tau = w.timeAt(i) - t_ref;
                const double x = K * tau;
                const double pred =
                    s0 + v0 * tau * dragPhi(x) + g[axis] * tau * tau * dragPsi(x);
                const double r = pred - w.posAt(i)[axis];
                sse += r * r;
            }
            return sse;
        };

        // Two starts guard against the flat SSE plateau near K = k_max.
        double best_K = 0.0, best_s0 = 0.0, best_v0 = 0.0;
        double best_sse = std::numeric_limits<double>::infinity();
        for (double K0 : {0.0, 0.5}) {
            double K = K0, s0 = 0, v0 = 0;
            double sse = profile(K, s0, v0);
            for (int it = 0; it < prm.max_iters; ++it) {
                // Gauss-Newton on the profiled objective: project the raw
                // residual derivative onto the complement of the linear
                // basis span{1, tau*phi} (variable projection), otherwise
                // steps are far too short.
                double jtr = 0;
                double p11 = 0, p12 = 0, p22 = 0, q1 = 0, q2 = 0, dd = 0;
                for (int i = 0; i < n; ++i) {
                    const double tau = w.timeAt(i) - t_ref;
                    const double x = K * tau;
                    const double c = tau * dragPhi(x);
                    const double pred =
                        s0 + v0 * c + g[axis] * tau * tau * dragPsi(x);
                    const double r = pred - w.posAt(i)[axis];
                    const double dr =
                        v0 * tau * tau * dragPhiDx(x) + g[axis] * tau * tau * tau * dragPsiDx(x);
                    jtr += dr * r;
                    p11 += 1.0;
                    p12 += c;
                    p22 += c * c;
                    q1 += dr;
                    q2 += dr * c;
                    dd += dr * dr;
                }
                // ||P dm||^2 with P the projector off the basis span.
                const double det = p11 * p22 - p12 * p12;
                double jtj = dd;
                if (std::abs(det) > 1e-14) {
                    const double u1 = (p22 * q1 - p12 * q2) / det;
                    const double u2 = (p11 * q2 - p12 * q1) / det;
                    jtj = dd - (q1 * u1 + q2 * u2);
                }
                if (jtj < 1e-16) break;
                double step = -jtr / jtj;
                double K_new = std::clamp(K + step, 0.0, prm.k_max);
                double s0n = 0, v0n = 0;
                double sse_new = profile(K_new, s0n, v0n);
                int halvings = 0;
                while (sse_new > sse && halvings < 12) {
                    step *= 0.5;
                    K_new = std::clamp(K + step, 0.0, prm.k_max);
                    sse_new = profile(K_new, s0n, v0n);
                    ++halvings;
                }
                if (sse_new > sse) break;
                const bool converged = std::abs(K_new - K) < prm.tol ||
                                       sse - sse_new < prm.tol * std::max(sse, 1.0);
                K = K_new;
                s0 = s0n;
                v0 = v0n;
                sse = sse_new;
                if (converged) break;
            }
            if (sse < best_sse) {
                best_sse = sse;
                best_K = K;
                best_s0 = s0;
                best_v0 = v0;
            }
        }

        // Re-anchor the axis state at the window's last timestamp.
        const double tau_end = w.timeAt(n - 1) - t_ref;
        const double x_end = best_K * tau_end;
        model.drag[axis] = best_K;
        model.s0[axis] = best_s0 + best_v0 * tau_end * dragPhi(x_end) +
                         g[axis] * tau_end * tau_end * dragPsi(x_end);
        model.v0[axis] =
            best_v0 * std::exp(-x_end) + g[axis] * tau_end * dragPhi(x_end);
    }
    model.t0 = w.timeAt(n - 1);
    return model;
}

}  // namespace catchplan
