#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "catchplan/types.hpp"

namespace catchplan {

// One polynomial piece. Column j of coeff holds the vector coefficient of
// t^j (local time), so degree = cols - 1.
struct Piece {
    Eigen::Matrix3Xd coeff;
    double duration = 0.0;

    int degree() const { return static_cast<int>(coeff.cols()) - 1; }

    // d^order/dt^order of the piece at local time t.
    Vec3 eval(double t, int order = 0) const {
        const int deg = degree();
        if (order < 0 || order > deg) {
            if (order < 0) throw std::domain_error("piece eval: negative derivative order");
            return Vec3::Zero();
        }
        // Horner over the differentiated polynomial.
        Vec3 v = Vec3::Zero();
        for (int j = deg; j >= order; --j) {
            double f = 1.0;
            for (int k = 0; k < order; ++k) f *= static_cast<double>(j - k);
            v = v * t + f * coeff.col(j);
        }
        return v;
    }
};

class Trajectory {
  public:
    Trajectory() = default;
    explicit Trajectory(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {}

    int pieceCount() const { return static_cast<int>(pieces_.size()); }
    const Piece& piece(int i) const { return pieces_[i]; }
    std::vector<Piece>& pieces() { return pieces_; }
    const std::vector<Piece>& pieces() const { return pieces_; }

    double totalDuration() const {
        double s = 0.0;
        for (const auto& p : pieces_) s += p.duration;
        return s;
    }

    void append(const Trajectory& other) {
        pieces_.insert(pieces_.end(), other.pieces_.begin(), other.pieces_.end());
    }

    // d^order/dt^order at global time t; t must lie within [0, total] up to
    // a small floating-point slack, exact junction times evaluate on the
    // right piece. order must be non-negative; orders above every piece's
    // degree are rejected rather than silently returning zero.
    Vec3 eval(double t, int order = 0) const {
        static constexpr double kSlack = 1e-9;
        if (pieces_.empty()) throw std::domain_error("trajectory eval: empty trajectory");
        if (order < 0) throw std::domain_error("trajectory eval: negative derivative order");
        const double total = totalDuration();
        if (t < -kSlack || t > total + kSlack)
            throw std::domain_error("trajectory eval: time outside [0, total duration]");
        if (order > pieces_.front().degree())
            throw std::domain_error("trajectory eval: derivative order exceeds polynomial degree");
        double local = std::min(std::max(t, 0.0), total);
        std::size_t i = 0;
        while (i + 1 < pieces_.size() && local >= pieces_[i].duration) {
            local -= pieces_[i].duration;
            ++i;
        }
        local = std::min(local, pieces_[i].duration);
        return pieces_[i].eval(local, order);
    }

    FlatState state(double t) const {
        FlatState s;
        s.pos = eval(t, 0);
        s.vel = eval(t, 1);
        s.acc = eval(t, 2);
        s.jerk = eval(t, 3);
        return s;
    }

  private:
    std::vector<Piece> pieces_;
};

}  // namespace catchplan
