#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "catchplan/outcome.hpp"
#include "catchplan/planner.hpp"
#include "catchplan/policy.hpp"
#include "catchplan/scenario.hpp"

namespace catchplan {

// Clamp raw policy outputs into the usable catch-time window.
inline Eigen::VectorXd maskAction(const Eigen::VectorXd& raw, double t_min, double t_max) {
    if (!(t_min < t_max)) throw std::domain_error("mask: need t_min < t_max");
    return raw.cwiseMax(t_min).cwiseMin(t_max);
}

struct RewardParams {
    double lambda_n = 1.0;   // catch-count term weight
    double lambda_c = 0.05;  // log planning-cost weight
    double lambda_t = 0.1;   // schedule-vs-optimizer mismatch weight
};

// Scalar step reward: saturating catch-count bonus, log of the planning
// cost, and the distance between the decided and optimizer-converged times.
inline double catchReward(int n_caught, int n_targets, double cost,
                          const Eigen::VectorXd& t_pred, const Eigen::VectorXd& t_opt,
                          const RewardParams& p) {
    if (!(cost > 0.0)) throw std::domain_error("reward: planning cost must be positive");
    if (t_pred.size() != t_opt.size())
        throw std::domain_error("reward: time vectors must align");
    const double n = static_cast<double>(n_caught);
    const double N = static_cast<double>(n_targets);
    return p.lambda_n * (std::exp(n - N) - std::exp(-N)) - p.lambda_c * std::log(cost) -
           p.lambda_t * (t_pred - t_opt).norm();
}

// Fixed observation layout: quad position, attitude quaternion (w x y z),
// quad velocity, then all target positions followed by all target velocities.
inline Eigen::VectorXd buildObservation(const Vec3& pos, const Eigen::Vector4d& att_wxyz,
                                        const Vec3& vel, const std::vector<Vec3>& target_pos,
                                        const std::vector<Vec3>& target_vel) {
    if (target_pos.size() != target_vel.size() || target_pos.empty())
        throw std::domain_error("observation: target blocks must align");
    const int n = static_cast<int>(target_pos.size());
    Eigen::VectorXd obs(10 + 6 * n);
    obs.segment<3>(0) = pos;
    obs.segment<4>(3) = att_wxyz;
    obs.segment<3>(7) = vel;
    for (int i = 0; i < n; ++i) {
        obs.segment<3>(10 + 3 * i) = target_pos[i];
        obs.segment<3>(10 + 3 * n + 3 * i) = target_vel[i];
    }
    return obs;
}

struct Transition {
    Eigen::VectorXd obs;
    Eigen::VectorXd action_raw;     // pre-mask Gaussian sample (log-prob basis)
    Eigen::VectorXd action_masked;  // executed action
    double logp = 0.0;
    double reward = 0.0;
    double value = 0.0;
    double advantage = 0.0;
    double ret = 0.0;
};

// Generalized advantage estimation over one episode in time order;
// bootstrap_value is the critic's estimate beyond the last step (zero at a
// terminal). One-step episodes reduce to advantage = reward - value.
inline void computeGae(std::span<Transition> episode, double gamma, double lambda,
                       double bootstrap_value = 0.0) {
    double adv = 0.0;
    double next_value = bootstrap_value;
    for (int t = static_cast<int>(episode.size()) - 1; t >= 0; --t) {
        const double delta = episode[t].reward + gamma * next_value - episode[t].value;
        adv = delta + gamma * lambda * adv;
        episode[t].advantage = adv;
        episode[t].ret = adv + episode[t].value;
        next_value = episode[t].value;
    }
}

struct PpoConfig {
    double clip = 0.2;
    int epochs = 10;
    int minibatch = 256;
    double lr = 3e-4;
    double gae_lambda = 0.95;
    double gamma = 0.99;
    double entropy_coef = 1e-3;
    double value_coef = 0.5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

// Per-sample loss terms and analytic gradients at the network heads. The
// clipped-surrogate gradient flows through the probability ratio only while
// the unclipped branch attains the min; a binding clip contributes nothing.
struct SampleGrads {
    Eigen::VectorXd d_mu;
    Eigen::VectorXd d_log_sigma;
    double d_value = 0.0;
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;  // unweighted 0.5 * (value - return)^2
    double entropy = 0.0;
    double ratio = 1.0;
    bool clip_active = false;
};

inline SampleGrads ppoSampleGrads(const Transition& tr, const PolicyNet::Heads& h,
                                  const PpoConfig& cfg) {
    const int n = static_cast<int>(h.mu.size());
    SampleGrads out;
    out.d_mu = Eigen::VectorXd::Zero(n);
    out.d_log_sigma = Eigen::VectorXd::Zero(n);

    const double logp = gaussianLogProb(tr.action_raw, h.mu, h.log_sigma);
    const double ratio = std::exp(logp - tr.logp);
    out.ratio = ratio;
    const double A = tr.advantage;
    const double surr1 = ratio * A;
    const double surr2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * A;
    out.policy_loss = -std::min(surr1, surr2);
    if (surr1 <= surr2) {
        const double dL_dratio = -A;
        for (int i = 0; i < n; ++i) {
            const double z = (tr.action_raw[i] - h.mu[i]) / h.sigma[i];
            out.d_mu[i] = dL_dratio * ratio * z / h.sigma[i];
            out.d_log_sigma[i] = dL_dratio * ratio * (z * z - 1.0);
        }
    } else {
        out.clip_active = true;
    }

    out.entropy = gaussianEntropy(h.log_sigma);
    out.d_log_sigma.array() -= cfg.entropy_coef;  // maximizing the entropy bonus

    const double verr = h.value - tr.ret;
    out.value_loss = 0.5 * verr * verr;
    out.d_value = cfg.value_coef * verr;

    out.loss = out.policy_loss + cfg.value_coef * out.value_loss - cfg.entropy_coef * out.entropy;
    return out;
}

struct PpoReport {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;
    int minibatches = 0;
    bool aborted = false;
};

// Clipped-surrogate update: batch-normalized advantages, shuffled minibatch
// epochs, Adam steps. A non-finite loss or gradient aborts the update and
// restores the incoming network and optimizer state.
inline PpoReport ppoUpdate(PolicyNet& net, Adam& opt, std::vector<Transition>& batch,
                           const PpoConfig& cfg, Rng& rng) {
    if (batch.empty()) throw std::domain_error("ppo: empty batch");
    const int B = static_cast<int>(batch.size());
    const int n = net.targets();

    double mean = 0.0;
    for (const auto& tr : batch) mean += tr.advantage;
    mean /= B;
    double var = 0.0;
    for (const auto& tr : batch) var += (tr.advantage - mean) * (tr.advantage - mean);
    const double stddev = std::sqrt(var / B);
    for (auto& tr : batch) tr.advantage = (tr.advantage - mean) / (stddev + 1e-8);

    const PolicyNet entry_net = net;
    const Adam entry_opt = opt;

    PpoReport rep;
    std::vector<int> idx(B);
    std::iota(idx.begin(), idx.end(), 0);
    PolicyNet::Grads grads = PolicyNet::Grads::zeroLike(net);
    PolicyNet::BatchCache cache;
    double acc_policy = 0.0, acc_value = 0.0, acc_entropy = 0.0, acc_ratio = 0.0;
    long clipped = 0, samples = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = B - 1; i > 0; --i)
            std::swap(idx[i], idx[static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1))]);
        for (int s0 = 0; s0 < B; s0 += cfg.minibatch) {
            const int nb = std::min(cfg.minibatch, B - s0);
            Eigen::MatrixXd X(net.obsDim(), nb);
            for (int j = 0; j < nb; ++j) X.col(j) = batch[idx[s0 + j]].obs;
            net.forwardBatch(X, cache);

            Eigen::MatrixXd dY = Eigen::MatrixXd::Zero(2 * n + 1, nb);
            double mb_loss = 0.0;
            for (int j = 0; j < nb; ++j) {
                const Transition& tr = batch[idx[s0 + j]];
                const PolicyNet::Heads h = net.headsFromColumn(cache.Y, j);
                const SampleGrads sg = ppoSampleGrads(tr, h, cfg);
                mb_loss += sg.loss;
                dY.col(j).head(n) = sg.d_mu;
                dY.col(j).segment(n, n) = sg.d_log_sigma;
                dY(2 * n, j) = sg.d_value;
                acc_policy += sg.policy_loss;
                acc_value += sg.value_loss;
                acc_entropy += sg.entropy;
                acc_ratio += sg.ratio;
                clipped += sg.clip_active ? 1 : 0;
                ++samples;
            }
            mb_loss /= nb;
            dY /= static_cast<double>(nb);
            grads.setZero();
            net.backwardBatch(cache, dY, grads);
            if (!std::isfinite(mb_loss) || !grads.allFinite()) {
                net = entry_net;
                opt = entry_opt;
                rep.aborted = true;
                return rep;
            }
            opt.step(net, grads);
            ++rep.minibatches;
        }
    }
    rep.policy_loss = acc_policy / samples;
    rep.value_loss = acc_value / samples;
    rep.entropy = acc_entropy / samples;
    rep.mean_ratio = acc_ratio / samples;
    rep.clip_fraction = static_cast<double>(clipped) / samples;
    return rep;
}

// One-shot planning environment: each episode is a single decide-plan-score
// step against freshly randomized targets, with the catch outcome judged
// analytically at the optimizer's terminal states.
struct EnvConfig {
    ScenarioSpec scenario;
    PlannerConfig planner;
    RewardParams reward;
    double t_min = 0.3;     // earliest allowed catch time (s)
    double j_fail = 1e6;    // planning cost charged when no plan is usable
};

struct StepResult {
    double reward = 0.0;
    CatchOutcome outcome;
    Eigen::VectorXd t_masked;     // clamped times, in action order
    Eigen::VectorXd t_scheduled;  // clamped times sorted into catch order
    Eigen::VectorXd t_optimized;  // optimizer's converged times, catch order
    double cost = 0.0;
};

class CatchEnv {
  public:
    explicit CatchEnv(EnvConfig cfg) : cfg_(std::move(cfg)), planner_(cfg_.planner) {
        validateSpec(cfg_.scenario);
        if (!(cfg_.t_min < cfg_.scenario.horizon))
            throw std::domain_error("env: t_min must precede the horizon");
    }

    const EnvConfig& config() const { return cfg_; }
    int targetCount() const { return cfg_.scenario.targets; }
    int obsDim() const { return 10 + 6 * cfg_.scenario.targets; }
    const FlatState& start() const { return start_; }
    const std::vector<TargetTruth>& targets() const { return targets_; }

    Eigen::VectorXd reset(Rng& rng) {
        start_ = sampleQuadStart(cfg_.scenario, rng);
        targets_ = generate(cfg_.scenario, rng);
        return observation();
    }

    // Inject a hand-built episode instead of sampling one.
    Eigen::VectorXd resetWith(const FlatState& start, std::vector<TargetTruth> targets) {
        if (static_cast<int>(targets.size()) != cfg_.scenario.targets)
            throw std::domain_error("env: injected target count mismatch");
        start_ = start;
        targets_ = std::move(targets);
        return observation();
    }

    // Observation at decision time zero: the quad at rest with identity
    // attitude; targets not yet launched are observed at their launch state.
    Eigen::VectorXd observation() const {
        std::vector<Vec3> tp, tv;
        tp.reserve(targets_.size());
        tv.reserve(targets_.size());
        for (const auto& t : targets_) {
            const double q = std::max(0.0, t.t0);
            tp.push_back(t.position(q));
            tv.push_back(t.velocity(q));
        }
        return buildObservation(start_.pos, Eigen::Vector4d(1, 0, 0, 0), start_.vel, tp, tv);
    }

    StepResult step(const Eigen::VectorXd& raw_action) {
        const int N = cfg_.scenario.targets;
        if (targets_.empty()) throw std::domain_error("env: step before reset");
        if (raw_action.size() != N) throw std::domain_error("env: action size mismatch");

        StepResult out;
        out.t_masked = maskAction(raw_action, cfg_.t_min, cfg_.scenario.horizon);

        // Ascending masked times define the catch sequence.
        std::vector<int> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return out.t_masked[a] < out.t_masked[b]; });
        std::vector<const TargetPrediction*> seq(N);
        std::vector<double> times(N);
        out.t_scheduled.resize(N);
        for (int k = 0; k < N; ++k) {
            seq[k] = &targets_[order[k]];
            times[k] = out.t_masked[order[k]];
            out.t_scheduled[k] = times[k];
        }

        PlanResult plan;
        bool planned = false;
        try {
            plan = planner_.plan(start_, seq, times);
            planned = plan.success;
        } catch (const std::domain_error&) {
            planned = false;  // e.g. two targets squeezed onto one instant
        }

        out.outcome.targets.resize(N);
        out.outcome.planning_success = planned;
        if (!planned) {
            out.cost = cfg_.j_fail;
            out.t_optimized = out.t_scheduled;  // no optimizer output to score against
            for (int k = 0; k < N; ++k)
                out.outcome.targets[order[k]].catch_time = times[k];
        } else {
            out.cost = plan.bundle.total;
            out.t_optimized.resize(N);
            for (int k = 0; k < N; ++k) {
                const double T = plan.catch_times[k];
                out.t_optimized[k] = T;
                const TerminalState& term = plan.terminals[k];
                const Vec3 axis = term.netAxis(cfg_.planner.limits.gravity);
                const Vec3 net = term.pos + cfg_.planner.limits.net_offset * axis;
                const CatchCheck chk = checkCatchGeometry(net, axis, seq[k]->position(T),
                                                          seq[k]->velocity(T),
                                                          cfg_.planner.limits);
                auto& pt = out.outcome.targets[order[k]];
                pt.success = chk.ok();
                pt.catch_time = T;
                pt.offset = chk.offset;
                pt.angle = chk.angle;
            }
        }
        out.reward = catchReward(out.outcome.caughtCount(), N, out.cost, out.t_scheduled,
                                 out.t_optimized, cfg_.reward);
        return out;
    }

  private:
    EnvConfig cfg_;
    CatchPlanner planner_;
    FlatState start_;
    std::vector<TargetTruth> targets_;
};

struct TrainConfig {
    EnvConfig env;
    PpoConfig ppo;
    int envs = 100;
    int episodes_per_env = 20;
    int iterations = 50;
    uint64_t seed = 1;
    int hidden = 64;
    double log_sigma_init = -0.5;
};

struct CurveRow {
    int iteration = 0;
    double mean_reward = 0.0;
    double catching_sr = 0.0;
    double planning_sr = 0.0;
    double otr = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

struct TrainResult {
    PolicyNet net;
    std::vector<CurveRow> curve;
};

// Versioned plain-text training curve; %.17g makes fixed-seed runs byte-
// comparable.
inline void writeCurve(std::ostream& os, const std::vector<CurveRow>& curve) {
    os << "catchplan-curve 1\n";
    os << "# iteration mean_reward catching_sr planning_sr otr policy_loss value_loss "
          "entropy\n";
    char buf[256];
    for (const auto& r : curve) {
        std::snprintf(buf, sizeof buf,
                      "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", r.iteration,
                      r.mean_reward, r.catching_sr, r.planning_sr, r.otr, r.policy_loss,
                      r.value_loss, r.entropy);
        os << buf;
    }
}

// On-policy training over independent one-step episodes. Every random draw
// comes from a stream derived from (seed, iteration, env), so the curve is
// reproducible bit-for-bit regardless of how env rollouts are scheduled.
inline TrainResult trainPolicy(const TrainConfig& cfg) {
    CatchEnv env(cfg.env);
    const int N = env.targetCount();

    Rng init_rng = Rng::derive(cfg.seed, 0);
    TrainResult out{
        PolicyNet::randomInit(env.obsDim(), N, cfg.hidden, cfg.log_sigma_init, init_rng),
        {}};
    Adam opt(out.net, cfg.ppo.lr, cfg.ppo.adam_beta1, cfg.ppo.adam_beta2, cfg.ppo.adam_eps);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        std::vector<Transition> batch;
        batch.reserve(static_cast<size_t>(cfg.envs) * cfg.episodes_per_env);
        std::vector<CatchOutcome> outcomes;
        std::vector<DecisionRecord> decisions;
        double reward_sum = 0.0;

        for (int e = 0; e < cfg.envs; ++e) {
            Rng env_rng = Rng::derive(
                cfg.seed, 1 + static_cast<uint64_t>(iter) * cfg.envs + e);
            for (int ep = 0; ep < cfg.episodes_per_env; ++ep) {
                Transition tr;
                tr.obs = env.reset(env_rng);
                const PolicyNet::Heads h = out.net.forward(tr.obs);
                tr.action_raw.resize(N);
                for (int i = 0; i < N; ++i)
                    tr.action_raw[i] = h.mu[i] + h.sigma[i] * env_rng.normal();
                tr.logp = gaussianLogProb(tr.action_raw, h.mu, h.log_sigma);
                tr.value = h.value;

                StepResult sr = env.step(tr.action_raw);
                tr.action_masked = sr.t_masked;
                tr.reward = sr.reward;
                computeGae(std::span<Transition>(&tr, 1), cfg.ppo.gamma, cfg.ppo.gae_lambda);

                reward_sum += sr.reward;
                outcomes.push_back(std::move(sr.outcome));
                if (outcomes.back().planning_success)
                    decisions.push_back({sr.t_scheduled, sr.t_optimized});
                batch.push_back(std::move(tr));
            }
        }

        const Metrics m = computeMetrics(outcomes, decisions);
        Rng shuffle_rng = Rng::derive(cfg.seed, 0x100000000ULL + static_cast<uint64_t>(iter));
        const PpoReport rep = ppoUpdate(out.net, opt, batch, cfg.ppo, shuffle_rng);

        CurveRow row;
        row.iteration = iter;
        row.mean_reward = reward_sum / static_cast<double>(batch.size());
        row.catching_sr = m.catching_sr;
        row.planning_sr = m.planning_sr;
        row.otr = m.otr;
        row.policy_loss = rep.policy_loss;
        row.value_loss = rep.value_loss;
        row.entropy = rep.entropy;
        out.curve.push_back(row);
    }
    return out;
}

}  // namespace catchplan
