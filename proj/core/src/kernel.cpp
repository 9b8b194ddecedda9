#include "dmft_sgd/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

TwoTimeKernel::TwoTimeKernel(const TimeGrid& grid, int rows, int cols, KernelKind kind)
    : grid_(grid), rows_(rows), cols_(cols), kind_(kind), points_(grid.points()) {
    if (rows < 1 || cols < 1) throw InvalidInput("kernel blocks need positive dimensions");
    data_.assign(points_ * points_ * static_cast<std::size_t>(rows * cols), 0.0);
}

Eigen::MatrixXd TwoTimeKernel::dense() const {
    const Eigen::Index P = static_cast<Eigen::Index>(points_);
    Eigen::MatrixXd m(P * rows_, P * cols_);
    for (std::size_t t = 0; t < points_; ++t)
        for (std::size_t s = 0; s < points_; ++s)
            m.block(static_cast<Eigen::Index>(t) * rows_, static_cast<Eigen::Index>(s) * cols_, rows_, cols_) =
                block(t, s);
    return m;
}

TwoTimeKernel TwoTimeKernel::from_dense(const Eigen::MatrixXd& m, const TimeGrid& grid, int rows, int cols,
                                        KernelKind kind) {
    TwoTimeKernel K(grid, rows, cols, kind);
    const Eigen::Index P = static_cast<Eigen::Index>(K.points_);
    if (m.rows() != P * rows || m.cols() != P * cols) throw StructuralError("dense matrix has the wrong shape");
    for (std::size_t t = 0; t < K.points_; ++t)
        for (std::size_t s = 0; s < K.points_; ++s)
            K.block(t, s) =
                m.block(static_cast<Eigen::Index>(t) * rows, static_cast<Eigen::Index>(s) * cols, rows, cols);
    return K;
}

void TwoTimeKernel::symmetrize() {
    if (rows_ != cols_) throw StructuralError("symmetrize needs square blocks");
    for (std::size_t t = 0; t < points_; ++t) {
        for (std::size_t s = t; s < points_; ++s) {
            const RowMatrix avg = 0.5 * (block(t, s) + block(s, t).transpose());
            block(t, s) = avg;
            block(s, t) = avg.transpose();
        }
    }
}

void TwoTimeKernel::enforce_causality() {
    for (std::size_t t = 0; t < points_; ++t)
        for (std::size_t s = t; s < points_; ++s) block(t, s).setZero();
}

bool TwoTimeKernel::is_causal() const {
    for (std::size_t t = 0; t < points_; ++t)
        for (std::size_t s = t; s < points_; ++s)
            if ((block(t, s).array() != 0.0).any()) return false;
    return true;
}

bool TwoTimeKernel::same_shape(const TwoTimeKernel& o) const {
    return grid_ == o.grid_ && rows_ == o.rows_ && cols_ == o.cols_;
}

TimeSeriesBlocks::TimeSeriesBlocks(const TimeGrid& grid, int rows, int cols)
    : grid_(grid), rows_(rows), cols_(cols), points_(grid.points()) {
    if (rows < 1 || cols < 1) throw InvalidInput("blocks need positive dimensions");
    data_.assign(points_ * static_cast<std::size_t>(rows * cols), 0.0);
}

bool TimeSeriesBlocks::same_shape(const TimeSeriesBlocks& o) const {
    return grid_ == o.grid_ && rows_ == o.rows_ && cols_ == o.cols_;
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in psd_project");
    if (es.eigenvalues().minCoeff() >= 0.0) return sym;
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

TwoTimeKernel psd_project(const TwoTimeKernel& C) {
    if (C.kind() != KernelKind::Covariance) throw StructuralError("psd_project needs a covariance kernel");
    if (C.rows() != C.cols()) throw StructuralError("psd_project needs square blocks");
    TwoTimeKernel out = TwoTimeKernel::from_dense(psd_project(C.dense()), C.grid(), C.rows(), C.cols(), C.kind());
    out.symmetrize();
    return out;
}

Eigen::MatrixXd joint_dense(const TwoTimeKernel& C, const TimeSeriesBlocks& C_star,
                            const Eigen::MatrixXd& C_star_star) {
    const Eigen::Index k = C.rows();
    const Eigen::Index ks = C_star.cols();
    const Eigen::Index n = static_cast<Eigen::Index>(C.points()) * k;
    Eigen::MatrixXd J(n + ks, n + ks);
    J.topLeftCorner(n, n) = C.dense();
    for (std::size_t t = 0; t < C.points(); ++t) {
        const Eigen::Index r = static_cast<Eigen::Index>(t) * k;
        J.block(r, n, k, ks) = C_star.block(t);
        J.block(n, r, ks, k) = C_star.block(t).transpose();
    }
    J.bottomRightCorner(ks, ks) = C_star_star;
    return J;
}

void psd_project_joint(TwoTimeKernel& C, TimeSeriesBlocks& C_star, Eigen::MatrixXd& C_star_star) {
    const Eigen::Index k = C.rows();
    const Eigen::Index ks = C_star.cols();
    const Eigen::Index n = static_cast<Eigen::Index>(C.points()) * k;
    const Eigen::MatrixXd J = psd_project(joint_dense(C, C_star, C_star_star));
    C = TwoTimeKernel::from_dense(J.topLeftCorner(n, n), C.grid(), C.rows(), C.cols(), C.kind());
    C.symmetrize();
    for (std::size_t t = 0; t < C.points(); ++t)
        C_star.block(t) = J.block(static_cast<Eigen::Index>(t) * k, n, k, ks);
    C_star_star = J.bottomRightCorner(ks, ks);
}

double sup_distance(const TwoTimeKernel& a, const TwoTimeKernel& b) {
    if (!a.same_shape(b)) throw StructuralError("kernel shapes differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

double sup_distance(const TimeSeriesBlocks& a, const TimeSeriesBlocks& b) {
    if (!a.same_shape(b)) throw StructuralError("block series shapes differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

}  // namespace dmft_sgd
