#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>

namespace catchplan {

enum class SolveStatus { kConverged, kMaxIterations, kLineSearchFailed };

struct SolverConfig {
    int memory = 8;
    int max_iters = 200;
    double g_tol = 1e-6;      // max-norm gradient tolerance
    double f_tol_rel = 1e-9;  // relative objective-decrease tolerance
    double c1 = 1e-4;         // sufficient-decrease constant
    double c2 = 0.9;          // curvature constant
    int max_line_trials = 50;
    // Optional observer invoked after every accepted iterate.
    std::function<void(int iter, double f, const Eigen::VectorXd& x)> on_iterate;
};

struct SolverReport {
    SolveStatus status = SolveStatus::kMaxIterations;
    int iterations = 0;
    int evaluations = 0;
    double final_cost = 0.0;
    double grad_norm = 0.0;  // max-norm at the returned iterate
    double wall_time_ms = 0.0;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    SolverReport report;
};

// Objective: fills grad and returns the cost at x.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Rejects unusable solver settings up front so a bad config surfaces as an
// eager throw instead of a silent optimization failure downstream.
inline void validateSolverConfig(const SolverConfig& cfg) {
    if (cfg.memory < 1) throw std::domain_error("lbfgs: memory must be >= 1");
    if (cfg.g_tol <= 0 || cfg.f_tol_rel <= 0)
        throw std::domain_error("lbfgs: tolerances must be positive");
    if (!(cfg.c1 > 0 && cfg.c1 < cfg.c2 && cfg.c2 < 1))
        throw std::domain_error("lbfgs: need 0 < c1 < c2 < 1");
}

// Limited-memory BFGS with a strong-Wolfe cubic-interpolation line search.
// Curvature pairs with y's <= 1e-12 are skipped rather than damped, which
// keeps the inverse-Hessian model positive definite across the occasional
// non-smooth seam of the penalty terms. Trial points where the objective
// throws a domain error (or returns a non-finite value) are treated as
// +infinity and rejected by the line search.
inline MinimizeResult lbfgsMinimize(const Objective& objective, Eigen::VectorXd x0,
                                    const SolverConfig& cfg = {}) {
    validateSolverConfig(cfg);

    const auto t_start = std::chrono::steady_clock::now();
    const double inf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(x0.size());

    MinimizeResult res;
    SolverReport& rep = res.report;

    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd g(n), g_new(n);
    double f = objective(x, g);
    ++rep.evaluations;
    if (!std::isfinite(f) || !g.allFinite())
        throw std::domain_error("lbfgs: objective is not finite at the starting point");

    // Guarded evaluation for line-search trials.
    auto evalSafe = [&](const Eigen::VectorXd& xt, Eigen::VectorXd& gt) {
        ++rep.evaluations;
        try {
            const double v = objective(xt, gt);
            return (std::isfinite(v) && gt.allFinite()) ? v : inf;
        } catch (const std::domain_error&) {
            return inf;
        }
    };

    std::deque<Eigen::VectorXd> mem_s, mem_y;
    std::deque<double> mem_rho;
    double gamma = 1.0;

    Eigen::VectorXd d(n), x_new(n);
    auto finish = [&](SolveStatus status) {
        rep.status = status;
        rep.final_cost = f;
        rep.grad_norm = g.lpNorm<Eigen::Infinity>();
        rep.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
        res.x = x;
        return res;
    };

    if (g.lpNorm<Eigen::Infinity>() <= cfg.g_tol) return finish(SolveStatus::kConverged);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        // Two-loop recursion for d = -H g.
        d = -g;
        const int m = static_cast<int>(mem_s.size());
        Eigen::VectorXd alpha_mem(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha_mem(i) = mem_rho[i] * mem_s[i].dot(d);
            d -= alpha_mem(i) * mem_y[i];
        }
        d *= gamma;
        for (int i = 0; i < m; ++i) {
            const double beta = mem_rho[i] * mem_y[i].dot(d);
            d += (alpha_mem(i) - beta) * mem_s[i];
        }

        double dphi0 = g.dot(d);
        if (dphi0 >= 0.0) {
            // The memory produced an ascent direction; fall back to steepest
            // descent with a fresh model.
            mem_s.clear();
            mem_y.clear();
            mem_rho.clear();
            d = -g;
            dphi0 = g.dot(d);
            if (dphi0 >= 0.0) return finish(SolveStatus::kConverged);  // g == 0
        }

        // First iteration: unit-length first trial so the solve is invariant
        // to a positive rescaling of the objective. Afterwards the scaled
        // model makes alpha = 1 the natural trial.
        const double alpha0 =
            mem_s.empty() ? 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-12) : 1.0;

        // Strong-Wolfe line search: bracket then zoom (cubic interpolation).
        const double phi0 = f;
        double alpha_lo = 0.0, alpha_hi = inf;
        double phi_lo = phi0, dphi_lo = dphi0;
        double phi_hi = inf, dphi_hi = std::numeric_limits<double>::quiet_NaN();
        double alpha = alpha0;
        double alpha_prev = 0.0, phi_prev = phi0, dphi_prev = dphi0;
        bool bracketed = false;
        bool accepted = false;
        double f_trial = inf;

        for (int trial = 0; trial < cfg.max_line_trials; ++trial) {
            x_new = x + alpha * d;
            f_trial = evalSafe(x_new, g_new);
            const double dphi =
                std::isfinite(f_trial) ? g_new.dot(d) : std::numeric_limits<double>::quiet_NaN();

            if (!bracketed) {
                if (f_trial > phi0 + cfg.c1 * alpha * dphi0 ||
                    (trial > 0 && f_trial >= phi_prev)) {
                    // Minimum bracketed between the previous and this trial.
                    alpha_lo = alpha_prev;
                    phi_lo = phi_prev;
                    dphi_lo = dphi_prev;
                    alpha_hi = alpha;
                    phi_hi = f_trial;
                    dphi_hi = dphi;
                    bracketed = true;
                } else if (std::abs(dphi) <= -cfg.c2 * dphi0) {
                    accepted = true;
                    break;
                } else if (dphi >= 0.0) {
                    alpha_lo = alpha;
                    phi_lo = f_trial;
                    dphi_lo = dphi;
                    alpha_hi = alpha_prev;
                    phi_hi = phi_prev;
                    dphi_hi = dphi_prev;
                    bracketed = true;
                } else {
                    alpha_prev = alpha;
                    phi_prev = f_trial;
                    dphi_prev = dphi;
                    alpha *= 2.0;
                    continue;
                }
                // Fall through into the zoom phase with the fresh bracket.
            } else {
                // Zoom bookkeeping.
                if (f_trial > phi0 + cfg.c1 * alpha * dphi0 || f_trial >= phi_lo) {
                    alpha_hi = alpha;
                    phi_hi = f_trial;
                    dphi_hi = dphi;
                } else {
                    if (std::abs(dphi) <= -cfg.c2 * dphi0) {
                        accepted = true;
                        break;
                    }
                    if (dphi * (alpha_hi - alpha_lo) >= 0.0) {
                        alpha_hi = alpha_lo;
                        phi_hi = phi_lo;
                        dphi_hi = dphi_lo;
                    }
                    alpha_lo = alpha;
                    phi_lo = f_trial;
                    dphi_lo = dphi;
                }
            }

            // Next zoom candidate: safeguarded cubic between lo and hi.
            const double lo = std::min(alpha_lo, alpha_hi);
            const double hi = std::max(alpha_lo, alpha_hi);
            if (hi - lo < 1e-16 * std::max(1.0, hi)) break;  // interval collapsed
            double cand = std::numeric_limits<double>::quiet_NaN();
            if (std::isfinite(phi_hi) && std::isfinite(dphi_hi)) {
                // Cubic through (lo, phi, dphi) on both ends.
                const double d1 = dphi_lo + dphi_hi -
                                  3.0 * (phi_lo - phi_hi) / (alpha_lo - alpha_hi);
                const double disc = d1 * d1 - dphi_lo * dphi_hi;
                if (disc >= 0.0) {
                    const double d2 = std::copysign(std::sqrt(disc), alpha_hi - alpha_lo);
                    cand = alpha_hi - (alpha_hi - alpha_lo) * (dphi_hi + d2 - d1) /
                                          (dphi_hi - dphi_lo + 2.0 * d2);
                }
            }
            const double margin = 0.1 * (hi - lo);
            if (!std::isfinite(cand) || cand < lo + margin || cand > hi - margin)
                cand = 0.5 * (lo + hi);
            alpha = cand;
        }

        if (!accepted) {
            if (!mem_s.empty()) {
                // Retry once from a fresh steepest-descent model before
                // reporting failure.
                mem_s.clear();
                mem_y.clear();
                mem_rho.clear();
                gamma = 1.0;
                continue;
            }
            return finish(SolveStatus::kLineSearchFailed);
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double f_old = f;
        x.swap(x_new);
        g.swap(g_new);
        f = f_trial;
        ++rep.iterations;
        if (cfg.on_iterate) cfg.on_iterate(rep.iterations, f, x);

        const double ys = y.dot(s);
        // Relative curvature guard: near-zero-curvature pairs (the penalty
        // kink, numerically flat regions) are skipped, not damped. The test
        // is scale-invariant so a rescaled objective skips the same pairs.
        if (ys > 1e-12 * s.norm() * y.norm()) {
            mem_s.push_back(s);
            mem_y.push_back(y);
            mem_rho.push_back(1.0 / ys);
            if (static_cast<int>(mem_s.size()) > cfg.memory) {
                mem_s.pop_front();
                mem_y.pop_front();
                mem_rho.pop_front();
            }
            gamma = ys / y.squaredNorm();
        }

        if (g.lpNorm<Eigen::Infinity>() <= cfg.g_tol) return finish(SolveStatus::kConverged);
        // Purely relative stagnation test (no absolute floor): rescaling the
        // objective rescales the threshold with it.
        if (std::abs(f_old - f) <= cfg.f_tol_rel * std::max(std::abs(f_old), std::abs(f)))
            return finish(SolveStatus::kConverged);
    }
    return finish(SolveStatus::kMaxIterations);
}

}  // namespace catchplan
