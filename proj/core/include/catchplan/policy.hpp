#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "catchplan/rng.hpp"

namespace catchplan {

// Gaussian action head over N catch times: joint log-density and entropy of
// independent per-dimension normals parameterized by (mu, log sigma).
inline double gaussianLogProb(const Eigen::VectorXd& action, const Eigen::VectorXd& mu,
                              const Eigen::VectorXd& log_sigma) {
    const double half_log_two_pi = 0.91893853320467274178;
    double lp = 0.0;
    for (int i = 0; i < action.size(); ++i) {
        const double z = (action[i] - mu[i]) * std::exp(-log_sigma[i]);
        lp += -0.5 * z * z - log_sigma[i] - half_log_two_pi;
    }
    return lp;
}

inline double gaussianEntropy(const Eigen::VectorXd& log_sigma) {
    const double half_log_two_pi_e = 1.41893853320467274178;
    return log_sigma.sum() + half_log_two_pi_e * static_cast<double>(log_sigma.size());
}

// Two-hidden-layer rectified-linear MLP. The shared trunk feeds a combined
// output layer: N action means, N log-sigmas (shifted by log_sigma_init so a
// zero network still explores), and one value estimate.
class PolicyNet {
  public:
    PolicyNet() = default;

    PolicyNet(int obs_dim, int targets, int hidden = 64, double log_sigma_init = -0.5)
        : obs_dim_(obs_dim), targets_(targets), hidden_(hidden),
          log_sigma_init_(log_sigma_init) {
        if (obs_dim < 1 || targets < 1 || hidden < 1)
            throw std::domain_error("policy: sizes must be positive");
        W1 = Eigen::MatrixXd::Zero(hidden, obs_dim);
        b1 = Eigen::VectorXd::Zero(hidden);
        W2 = Eigen::MatrixXd::Zero(hidden, hidden);
        b2 = Eigen::VectorXd::Zero(hidden);
        W3 = Eigen::MatrixXd::Zero(2 * targets + 1, hidden);
        b3 = Eigen::VectorXd::Zero(2 * targets + 1);
    }

    // Xavier-uniform trunk; the action rows of the output layer start small
    // so early updates explore around near-zero means instead of swinging.
    static PolicyNet randomInit(int obs_dim, int targets, int hidden, double log_sigma_init,
                                Rng& rng) {
        PolicyNet net(obs_dim, targets, hidden, log_sigma_init);
        auto fill = [&rng](Eigen::MatrixXd& w) {
            const double s =
                std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
            for (int c = 0; c < w.cols(); ++c)
                for (int r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-s, s);
        };
        fill(net.W1);
        fill(net.W2);
        fill(net.W3);
        net.W3.topRows(2 * targets) *= 0.1;
        return net;
    }

    int obsDim() const { return obs_dim_; }
    int targets() const { return targets_; }
    int hidden() const { return hidden_; }
    double logSigmaInit() const { return log_sigma_init_; }

    struct Heads {
        Eigen::VectorXd mu;
        Eigen::VectorXd log_sigma;
        Eigen::VectorXd sigma;
        double value = 0.0;
    };

    Heads forward(const Eigen::VectorXd& obs) const {
        if (obs.size() != obs_dim_) throw std::domain_error("policy: observation size mismatch");
        const Eigen::VectorXd h1 = (W1 * obs + b1).cwiseMax(0.0);
        const Eigen::VectorXd h2 = (W2 * h1 + b2).cwiseMax(0.0);
        const Eigen::VectorXd y = W3 * h2 + b3;
        Heads out;
        out.mu = y.head(targets_);
        out.log_sigma = y.segment(targets_, targets_).array() + log_sigma_init_;
        out.sigma = out.log_sigma.array().exp();
        out.value = y(2 * targets_);
        return out;
    }

    // Batched pass over column-stacked observations, caching pre-activations
    // for the backward sweep. Output rows follow the Heads layout; the
    // log_sigma_init shift is applied by the consumer via headsFromColumn.
    struct BatchCache {
        Eigen::MatrixXd X, Z1, H1, Z2, H2, Y;
    };

    void forwardBatch(const Eigen::MatrixXd& X, BatchCache& c) const {
        if (X.rows() != obs_dim_) throw std::domain_error("policy: observation size mismatch");
        c.X = X;
        c.Z1 = (W1 * X).colwise() + b1;
        c.H1 = c.Z1.cwiseMax(0.0);
        c.Z2 = (W2 * c.H1).colwise() + b2;
        c.H2 = c.Z2.cwiseMax(0.0);
        c.Y = (W3 * c.H2).colwise() + b3;
    }

    Heads headsFromColumn(const Eigen::MatrixXd& Y, int col) const {
        Heads out;
        out.mu = Y.col(col).head(targets_);
        out.log_sigma = Y.col(col).segment(targets_, targets_).array() + log_sigma_init_;
        out.sigma = out.log_sigma.array().exp();
        out.value = Y(2 * targets_, col);
        return out;
    }

    struct Grads {
        Eigen::MatrixXd W1, W2, W3;
        Eigen::VectorXd b1, b2, b3;

        static Grads zeroLike(const PolicyNet& net) {
            Grads g;
            g.W1 = Eigen::MatrixXd::Zero(net.W1.rows(), net.W1.cols());
            g.b1 = Eigen::VectorXd::Zero(net.b1.size());
            g.W2 = Eigen::MatrixXd::Zero(net.W2.rows(), net.W2.cols());
            g.b2 = Eigen::VectorXd::Zero(net.b2.size());
            g.W3 = Eigen::MatrixXd::Zero(net.W3.rows(), net.W3.cols());
            g.b3 = Eigen::VectorXd::Zero(net.b3.size());
            return g;
        }

        void setZero() {
            W1.setZero();
            b1.setZero();
            W2.setZero();
            b2.setZero();
            W3.setZero();
            b3.setZero();
        }

        bool allFinite() const {
            return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite() &&
                   W3.allFinite() && b3.allFinite();
        }
    };

    // Accumulates parameter gradients for a batch given the loss gradient at
    // the output rows (dY already carries any 1/batch scaling). The rectified
    // units pass gradient only where the pre-activation was strictly positive.
    void backwardBatch(const BatchCache& c, const Eigen::MatrixXd& dY, Grads& g) const {
        g.W3 += dY * c.H2.transpose();
        g.b3 += dY.rowwise().sum();
        Eigen::MatrixXd dZ2 =
            (W3.transpose() * dY).array() * (c.Z2.array() > 0.0).cast<double>();
        g.W2 += dZ2 * c.H1.transpose();
        g.b2 += dZ2.rowwise().sum();
        Eigen::MatrixXd dZ1 =
            (W2.transpose() * dZ2).array() * (c.Z1.array() > 0.0).cast<double>();
        g.W1 += dZ1 * c.X.transpose();
        g.b1 += dZ1.rowwise().sum();
    }

    // Plain-text checkpoint, versioned; %.17g keeps doubles bit-exact across
    // a save/load round trip.
    void save(std::ostream& os) const {
        os << "catchplan-policy 1\n";
        os << "obs " << obs_dim_ << " targets " << targets_ << " hidden " << hidden_ << "\n";
        os << "log_sigma_init " << fmt(log_sigma_init_) << "\n";
        writeTensor(os, "W1", W1);
        writeTensor(os, "b1", b1);
        writeTensor(os, "W2", W2);
        writeTensor(os, "b2", b2);
        writeTensor(os, "W3", W3);
        writeTensor(os, "b3", b3);
    }

    static PolicyNet load(std::istream& is) {
        std::string tag;
        int version = 0;
        is >> tag >> version;
        if (!is || tag != "catchplan-policy")
            throw std::runtime_error("policy checkpoint: unrecognized header");
        if (version != 1) throw std::runtime_error("policy checkpoint: unsupported version");
        std::string key;
        int obs = 0, targets = 0, hidden = 0;
        double lsi = 0.0;
        is >> key >> obs >> key >> targets >> key >> hidden;
        is >> key >> lsi;
        if (!is || obs < 1 || targets < 1 || hidden < 1)
            throw std::runtime_error("policy checkpoint: bad dimensions");
        PolicyNet net(obs, targets, hidden, lsi);
        readTensor(is, "W1", net.W1);
        readVector(is, "b1", net.b1);
        readTensor(is, "W2", net.W2);
        readVector(is, "b2", net.b2);
        readTensor(is, "W3", net.W3);
        readVector(is, "b3", net.b3);
        return net;
    }

    void saveFile(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("policy checkpoint: cannot write " + path);
        save(os);
        if (!os) throw std::runtime_error("policy checkpoint: write failed for " + path);
    }

    static PolicyNet loadFile(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("policy checkpoint: cannot read " + path);
        return load(is);
    }

    Eigen::MatrixXd W1, W2, W3;
    Eigen::VectorXd b1, b2, b3;

  private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static void writeTensor(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
        os << name << " " << m.rows() << " " << m.cols() << "\n";
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) os << (c ? " " : "") << fmt(m(r, c));
            os << "\n";
        }
    }

    static void writeTensor(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
        os << name << " " << v.size() << " 1\n";
        for (int r = 0; r < v.size(); ++r) os << (r ? " " : "") << fmt(v[r]);
        os << "\n";
    }

    static void readTensor(std::istream& is, const char* name, Eigen::MatrixXd& m) {
        std::string got;
        long rows = 0, cols = 0;
        is >> got >> rows >> cols;
        if (!is || got != name || rows != m.rows() || cols != m.cols())
            throw std::runtime_error(std::string("policy checkpoint: bad tensor ") + name);
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) is >> m(r, c);
        if (!is) throw std::runtime_error(std::string("policy checkpoint: truncated ") + name);
    }

    static void readVector(std::istream& is, const char* name, Eigen::VectorXd& v) {
        std::string got;
        long rows = 0, cols = 0;
        is >> got >> rows >> cols;
        if (!is || got != name || rows != v.size() || cols != 1)
            throw std::runtime_error(std::string("policy checkpoint: bad tensor ") + name);
        for (int r = 0; r < v.size(); ++r) is >> v[r];
        if (!is) throw std::runtime_error(std::string("policy checkpoint: truncated ") + name);
    }

    int obs_dim_ = 0;
    int targets_ = 0;
    int hidden_ = 0;
    double log_sigma_init_ = -0.5;
};

// First/second-moment adaptive step with bias correction. A zero learning
// rate leaves parameters bit-identical (moments still advance).
class Adam {
  public:
    Adam(const PolicyNet& net, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          m_(PolicyNet::Grads::zeroLike(net)), v_(PolicyNet::Grads::zeroLike(net)) {}

    double learningRate() const { return lr_; }

    void step(PolicyNet& net, const PolicyNet::Grads& g) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        const double alpha = lr_ * std::sqrt(bc2) / bc1;
        auto upd = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
                       Eigen::MatrixXd& v) {
            m = beta1_ * m + (1.0 - beta1_) * grad;
            v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
            p.array() -= alpha * m.array() / (v.array().sqrt() + eps_);
        };
        upd(net.W1, g.W1, m_.W1, v_.W1);
        upd(net.W2, g.W2, m_.W2, v_.W2);
        upd(net.W3, g.W3, m_.W3, v_.W3);
        updVec(net.b1, g.b1, m_.b1, v_.b1);
        updVec(net.b2, g.b2, m_.b2, v_.b2);
        updVec(net.b3, g.b3, m_.b3, v_.b3);
    }

  private:
    void updVec(Eigen::VectorXd& p, const Eigen::VectorXd& grad, Eigen::VectorXd& m,
                Eigen::VectorXd& v) {
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        const double alpha = lr_ * std::sqrt(bc2) / bc1;
        m = beta1_ * m + (1.0 - beta1_) * grad;
        v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
        p -= alpha * (m.array() / (v.array().sqrt() + eps_)).matrix();
    }

    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    PolicyNet::Grads m_, v_;
};

}  // namespace catchplan
