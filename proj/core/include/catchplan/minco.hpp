#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "catchplan/trajectory.hpp"
#include "catchplan/types.hpp"

namespace catchplan {

// Banded linear solver, LU with partial pivoting restricted to the band
// (row interchanges only reach the lower bandwidth, so fill-in is bounded
// by lower + upper superdiagonals). Column-major band storage.
class BandedLU {
  public:
    void create(int n, int lower, int upper) {
        n_ = n;
        lb_ = lower;
        ub_ = upper;
        ube_ = lower + upper;  // fill-in from pivoting
        ldab_ = lb_ + ube_ + 1;
        data_.assign(static_cast<std::size_t>(ldab_) * n_, 0.0);
        ipiv_.assign(n_, 0);
        factored_ = false;
    }

    void reset() {
        std::fill(data_.begin(), data_.end(), 0.0);
        factored_ = false;
    }

    double& operator()(int i, int j) { return data_[bandIndex(i, j)]; }
    double operator()(int i, int j) const { return data_[bandIndex(i, j)]; }

    void factorize() {
        for (int k = 0; k < n_; ++k) {
            const int last_row = std::min(k + lb_, n_ - 1);
            int piv = k;
            double piv_abs = std::abs((*this)(k, k));
            for (int i = k + 1; i <= last_row; ++i) {
                const double v = std::abs((*this)(i, k));
                if (v > piv_abs) {
                    piv_abs = v;
                    piv = i;
                }
            }
            if (piv_abs < 1e-300)
                throw std::runtime_error("BandedLU: singular system");
            ipiv_[k] = piv;
            const int last_col = std::min(k + ube_, n_ - 1);
            if (piv != k)
                for (int j = k; j <= last_col; ++j)
                    std::swap((*this)(k, j), (*this)(piv, j));
            const double inv_pivot = 1.0 / (*this)(k, k);
            for (int i = k + 1; i <= last_row; ++i) {
                const double m = (*this)(i, k) * inv_pivot;
                (*this)(i, k) = m;
                if (m != 0.0)
                    for (int j = k + 1; j <= last_col; ++j)
                        (*this)(i, j) -= m * (*this)(k, j);
            }
        }
        factored_ = true;
    }

    // In-place solve A x = b for a dense RHS block.
    template <typename Derived>
    void solve(Eigen::MatrixBase<Derived>& b) const {
        requireFactored();
        for (int k = 0; k < n_; ++k) {
            if (ipiv_[k] != k) b.row(k).swap(b.row(ipiv_[k]));
            const int last_row = std::min(k + lb_, n_ - 1);
            for (int i = k + 1; i <= last_row; ++i) {
                const double m = (*this)(i, k);
                if (m != 0.0) b.row(i) -= m * b.row(k);
            }
        }
        for (int k = n_ - 1; k >= 0; --k) {
            const int last_col = std::min(k + ube_, n_ - 1);
            for (int j = k + 1; j <= last_col; ++j) {
                const double u = (*this)(k, j);
                if (u != 0.0) b.row(k) -= u * b.row(j);
            }
            b.row(k) /= (*this)(k, k);
        }
    }

    // In-place solve A^T x = b (adjoint pass): U^T forward, then the
    // transposed elementary eliminations with interchanges replayed in
    // reverse.
    template <typename Derived>
    void solveAdj(Eigen::MatrixBase<Derived>& b) const {
        requireFactored();
        for (int k = 0; k < n_; ++k) {
            const int first = std::max(0, k - ube_);
            for (int i = first; i < k; ++i) {
                const double u = (*this)(i, k);
                if (u != 0.0) b.row(k) -= u * b.row(i);
            }
            b.row(k) /= (*this)(k, k);
        }
        for (int k = n_ - 2; k >= 0; --k) {
            const int last_row = std::min(k + lb_, n_ - 1);
            for (int i = k + 1; i <= last_row; ++i) {
                const double m = (*this)(i, k);
                if (m != 0.0) b.row(k) -= m * b.row(i);
            }
            if (ipiv_[k] != k) b.row(k).swap(b.row(ipiv_[k]));
        }
    }

  private:
    std::size_t bandIndex(int i, int j) const {
        return static_cast<std::size_t>(i - j + ube_) + static_cast<std::size_t>(j) * ldab_;
    }
    void requireFactored() const {
        if (!factored_) throw std::logic_error("BandedLU: not factorized");
    }
    int n_ = 0, lb_ = 0, ub_ = 0, ube_ = 0, ldab_ = 0;
    std::vector<double> data_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

// Minimum-snap piecewise degree-7 spline through interior waypoints with
// full position/velocity/acceleration/jerk states pinned at both ends.
// Construction solves one banded 8M x 8M system per axis (the linear
// optimality conditions: C^6 junction smoothness + boundary + waypoint
// interpolation); gradients of any downstream functional are pulled back
// through the system by one adjoint banded solve.
class MincoSnap {
  public:
    // head/tail columns: position, velocity, acceleration, jerk.
    void setConditions(const Eigen::Matrix<double, 3, 4>& head,
                       const Eigen::Matrix<double, 3, 4>& tail, int piece_count) {
        if (piece_count < 1) throw std::domain_error("MincoSnap: need at least one piece");
        N_ = piece_count;
        head_ = head;
        tail_ = tail;
        A_.create(8 * N_, 8, 8);
        b_.resize(8 * N_, 3);
        T1_.resize(N_);
        adj_.resize(8 * N_, 3);
    }

    void setTailState(const Eigen::Matrix<double, 3, 4>& tail) { tail_ = tail; }
    void setHeadState(const Eigen::Matrix<double, 3, 4>& head) { head_ = head; }

    int pieceCount() const { return N_; }

    // Solve for the spline through inner waypoints (3 x (M-1)) with piece
    // durations ts (all > 0).
    void setParameters(const Eigen::Matrix3Xd& inner, const Eigen::VectorXd& ts) {
        if (inner.cols() != N_ - 1)
            throw std::domain_error("MincoSnap: waypoint count must be piece count - 1");
        if (ts.size() != N_) throw std::domain_error("MincoSnap: need one duration per piece");
        if ((ts.array() <= 0.0).any())
            throw std::domain_error("MincoSnap: durations must be positive");
        T1_ = ts;

        A_.reset();
        b_.setZero();

        A_(0, 0) = 1.0;
        A_(1, 1) = 1.0;
        A_(2, 2) = 2.0;
        A_(3, 3) = 6.0;
        b_.row(0) = head_.col(0).transpose();
        b_.row(1) = head_.col(1).transpose();
        b_.row(2) = head_.col(2).transpose();
        b_.row(3) = head_.col(3).transpose();

        for (int i = 0; i < N_ - 1; ++i) {
            const double T = T1_(i);
            const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T,
                         T7 = T6 * T;
            const int r = 8 * i;
            // Snap through d^6 continuity (the optimality conditions).
            A_(r + 4, r + 4) = 24.0;
            A_(r + 4, r + 5) = 120.0 * T;
            A_(r + 4, r + 6) = 360.0 * T2;
            A_(r + 4, r + 7) = 840.0 * T3;
            A_(r + 4, r + 12) = -24.0;
            A_(r + 5, r + 5) = 120.0;
            A_(r + 5, r + 6) = 720.0 * T;
            A_(r + 5, r + 7) = 2520.0 * T2;
            A_(r + 5, r + 13) = -120.0;
            A_(r + 6, r + 6) = 720.0;
            A_(r + 6, r + 7) = 5040.0 * T;
            A_(r + 6, r + 14) = -720.0;
            // Waypoint interpolation.
            A_(r + 7, r + 0) = 1.0;
            A_(r + 7, r + 1) = T;
            A_(r + 7, r + 2) = T2;
            A_(r + 7, r + 3) = T3;
            A_(r + 7, r + 4) = T4;
            A_(r + 7, r + 5) = T5;
            A_(r + 7, r + 6) = T6;
            A_(r + 7, r + 7) = T7;
            b_.row(r + 7) = inner.col(i).transpose();
            // Position through jerk continuity.
            A_(r + 8, r + 0) = 1.0;
            A_(r + 8, r + 1) = T;
            A_(r + 8, r + 2) = T2;
            A_(r + 8, r + 3) = T3;
            A_(r + 8, r + 4) = T4;
            A_(r + 8, r + 5) = T5;
            A_(r + 8, r + 6) = T6;
            A_(r + 8, r + 7) = T7;
            A_(r + 8, r + 8) = -1.0;
            A_(r + 9, r + 1) = 1.0;
            A_(r + 9, r + 2) = 2.0 * T;
            A_(r + 9, r + 3) = 3.0 * T2;
            A_(r + 9, r + 4) = 4.0 * T3;
            A_(r + 9, r + 5) = 5.0 * T4;
            A_(r + 9, r + 6) = 6.0 * T5;
            A_(r + 9, r + 7) = 7.0 * T6;
            A_(r + 9, r + 9) = -1.0;
            A_(r + 10, r + 2) = 2.0;
            A_(r + 10, r + 3) = 6.0 * T;
            A_(r + 10, r + 4) = 12.0 * T2;
            A_(r + 10, r + 5) = 20.0 * T3;
            A_(r + 10, r + 6) = 30.0 * T4;
            A_(r + 10, r + 7) = 42.0 * T5;
            A_(r + 10, r + 10) = -2.0;
            A_(r + 11, r + 3) = 6.0;
            A_(r + 11, r + 4) = 24.0 * T;
            A_(r + 11, r + 5) = 60.0 * T2;
            A_(r + 11, r + 6) = 120.0 * T3;
            A_(r + 11, r + 7) = 210.0 * T4;
            A_(r + 11, r + 11) = -6.0;
        }

        {
            const double T = T1_(N_ - 1);
            const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T,
                         T7 = T6 * T;
            const int r = 8 * N_ - 8;
            A_(8 * N_ - 4, r + 0) = 1.0;
            A_(8 * N_ - 4, r + 1) = T;
            A_(8 * N_ - 4, r + 2) = T2;
            A_(8 * N_ - 4, r + 3) = T3;
            A_(8 * N_ - 4, r + 4) = T4;
            A_(8 * N_ - 4, r + 5) = T5;
            A_(8 * N_ - 4, r + 6) = T6;
            A_(8 * N_ - 4, r + 7) = T7;
            A_(8 * N_ - 3, r + 1) = 1.0;
            A_(8 * N_ - 3, r + 2) = 2.0 * T;
            A_(8 * N_ - 3, r + 3) = 3.0 * T2;
            A_(8 * N_ - 3, r + 4) = 4.0 * T3;
            A_(8 * N_ - 3, r + 5) = 5.0 * T4;
            A_(8 * N_ - 3, r + 6) = 6.0 * T5;
            A_(8 * N_ - 3, r + 7) = 7.0 * T6;
            A_(8 * N_ - 2, r + 2) = 2.0;
            A_(8 * N_ - 2, r + 3) = 6.0 * T;
            A_(8 * N_ - 2, r + 4) = 12.0 * T2;
            A_(8 * N_ - 2, r + 5) = 20.0 * T3;
            A_(8 * N_ - 2, r + 6) = 30.0 * T4;
            A_(8 * N_ - 2, r + 7) = 42.0 * T5;
            A_(8 * N_ - 1, r + 3) = 6.0;
            A_(8 * N_ - 1, r + 4) = 24.0 * T;
            A_(8 * N_ - 1, r + 5) = 60.0 * T2;
            A_(8 * N_ - 1, r + 6) = 120.0 * T3;
            A_(8 * N_ - 1, r + 7) = 210.0 * T4;
            b_.row(8 * N_ - 4) = tail_.col(0).transpose();
            b_.row(8 * N_ - 3) = tail_.col(1).transpose();
            b_.row(8 * N_ - 2) = tail_.col(2).transpose();
            b_.row(8 * N_ - 1) = tail_.col(3).transpose();
        }

        A_.factorize();
        A_.solve(b_);
    }

    const Eigen::MatrixX3d& coeffs() const { return b_; }
    double duration(int i) const { return T1_(i); }
    const Eigen::VectorXd& durations() const { return T1_; }

    Trajectory getTrajectory() const {
        std::vector<Piece> pieces(N_);
        for (int i = 0; i < N_; ++i) {
            pieces[i].duration = T1_(i);
            pieces[i].coeff = b_.middleRows(8 * i, 8).transpose();
        }
        return Trajectory(std::move(pieces));
    }

    // \sum_i \int_0^{T_i} || p_i^{(4)} ||^2 dt in closed form.
    double getEnergy() const {
        double energy = 0.0;
        for (int i = 0; i < N_; ++i) {
            const double T = T1_(i);
            const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T,
                         T7 = T6 * T;
            const auto c4 = b_.row(8 * i + 4), c5 = b_.row(8 * i + 5), c6 = b_.row(8 * i + 6),
                       c7 = b_.row(8 * i + 7);
            energy += 576.0 * c4.squaredNorm() * T + 2880.0 * c4.dot(c5) * T2 +
                      4800.0 * c5.squaredNorm() * T3 + 5760.0 * c4.dot(c6) * T3 +
                      21600.0 * c5.dot(c6) * T4 + 10080.0 * c4.dot(c7) * T4 +
                      25920.0 * c6.squaredNorm() * T5 + 40320.0 * c5.dot(c7) * T5 +
                      100800.0 * c6.dot(c7) * T6 + 100800.0 * c7.squaredNorm() * T7;
        }
        return energy;
    }

    // d(energy)/d(coefficients), accumulated into gdC (8M x 3).
    void addEnergyGradByCoeffs(Eigen::MatrixX3d& gdC) const {
        for (int i = 0; i < N_; ++i) {
            const double T = T1_(i);
            const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T,
                         T7 = T6 * T;
            const auto c4 = b_.row(8 * i + 4), c5 = b_.row(8 * i + 5), c6 = b_.row(8 * i + 6),
                       c7 = b_.row(8 * i + 7);
            gdC.row(8 * i + 4) +=
                1152.0 * c4 * T + 2880.0 * c5 * T2 + 5760.0 * c6 * T3 + 10080.0 * c7 * T4;
            gdC.row(8 * i + 5) +=
                2880.0 * c4 * T2 + 9600.0 * c5 * T3 + 21600.0 * c6 * T4 + 40320.0 * c7 * T5;
            gdC.row(8 * i + 6) +=
                5760.0 * c4 * T3 + 21600.0 * c5 * T4 + 51840.0 * c6 * T5 + 100800.0 * c7 * T6;
            gdC.row(8 * i + 7) +=
                10080.0 * c4 * T4 + 40320.0 * c5 * T5 + 100800.0 * c6 * T6 +
                201600.0 * c7 * T7;
        }
    }

    // d(energy)/d(durations) = ||p^{(4)}(T_i)||^2 per piece, accumulated.
    void addEnergyGradByTimes(Eigen::VectorXd& gdT) const {
        for (int i = 0; i < N_; ++i) gdT(i) += snapAtEnd(i).squaredNorm();
    }

    // Pull back (dF/dc, dF/dT) into gradients w.r.t. inner waypoints, piece
    // durations, and the boundary states (position, velocity, acceleration
    // columns; boundary jerks are held fixed).
    void propagateGrad(const Eigen::MatrixX3d& partialGradByCoeffs,
                       const Eigen::VectorXd& partialGradByTimes,
                       Eigen::Matrix3Xd& gradByPoints, Eigen::VectorXd& gradByTimes,
                       Eigen::Matrix3d* gradByHead = nullptr,
                       Eigen::Matrix3d* gradByTail = nullptr) const {
        adj_ = partialGradByCoeffs;
        A_.solveAdj(adj_);

        gradByPoints.resize(3, N_ - 1);
        for (int i = 0; i < N_ - 1; ++i)
            gradByPoints.col(i) = adj_.row(8 * i + 7).transpose();
        if (gradByHead) {
            gradByHead->col(0) = adj_.row(0).transpose();
            gradByHead->col(1) = adj_.row(1).transpose();
            gradByHead->col(2) = adj_.row(2).transpose();
        }
        if (gradByTail) {
            gradByTail->col(0) = adj_.row(8 * N_ - 4).transpose();
            gradByTail->col(1) = adj_.row(8 * N_ - 3).transpose();
            gradByTail->col(2) = adj_.row(8 * N_ - 2).transpose();
        }

        gradByTimes = partialGradByTimes;
        for (int i = 0; i < N_; ++i) {
            const Eigen::RowVector3d vel = derivAtEnd(i, 1), acc = derivAtEnd(i, 2),
                                     jer = derivAtEnd(i, 3), snp = derivAtEnd(i, 4),
                                     crk = derivAtEnd(i, 5), pop = derivAtEnd(i, 6),
                                     d7 = derivAtEnd(i, 7);
            double g = 0.0;
            if (i < N_ - 1) {
                const int r = 8 * i;
                g -= adj_.row(r + 4).dot(crk);
                g -= adj_.row(r + 5).dot(pop);
                g -= adj_.row(r + 6).dot(d7);
                g -= adj_.row(r + 7).dot(vel);
                g -= adj_.row(r + 8).dot(vel);
                g -= adj_.row(r + 9).dot(acc);
                g -= adj_.row(r + 10).dot(jer);
                g -= adj_.row(r + 11).dot(snp);
            } else {
                g -= adj_.row(8 * N_ - 4).dot(vel);
                g -= adj_.row(8 * N_ - 3).dot(acc);
                g -= adj_.row(8 * N_ - 2).dot(jer);
                g -= adj_.row(8 * N_ - 1).dot(snp);
            }
            gradByTimes(i) += g;
        }
    }

  private:
    // d^order of piece i at its own end time.
    Eigen::RowVector3d derivAtEnd(int i, int order) const {
        const double T = T1_(i);
        Eigen::RowVector3d v = Eigen::RowVector3d::Zero();
        for (int j = 7; j >= order; --j) {
            double f = 1.0;
            for (int k = 0; k < order; ++k) f *= static_cast<double>(j - k);
            v = v * T + f * b_.row(8 * i + j);
        }
        return v;
    }

    Eigen::RowVector3d snapAtEnd(int i) const { return derivAtEnd(i, 4); }

    int N_ = 0;
    Eigen::Matrix<double, 3, 4> head_ = Eigen::Matrix<double, 3, 4>::Zero();
    Eigen::Matrix<double, 3, 4> tail_ = Eigen::Matrix<double, 3, 4>::Zero();
    BandedLU A_;
    Eigen::MatrixX3d b_;
    Eigen::VectorXd T1_;
    mutable Eigen::MatrixX3d adj_;
};

}  // namespace catchplan
