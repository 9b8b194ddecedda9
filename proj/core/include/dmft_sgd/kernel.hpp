#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/time_grid.hpp"

namespace dmft_sgd {

enum class KernelKind { Covariance, Response };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BlockMap = Eigen::Map<RowMatrix>;
using ConstBlockMap = Eigen::Map<const RowMatrix>;

/// Two-time kernel on a TimeGrid: one rows x cols block per pair of grid
/// points (t, s), t, s = 0..N. Storage is a flat row-major [t][s][i][j] array,
/// which is also the payload order of the kernel container.
class TwoTimeKernel {
public:
    TwoTimeKernel() = default;
    TwoTimeKernel(const TimeGrid& grid, int rows, int cols, KernelKind kind);

    const TimeGrid& grid() const { return grid_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    KernelKind kind() const { return kind_; }
    std::size_t points() const { return points_; }

    double* block_data(std::size_t t, std::size_t s) { return data_.data() + offset(t, s); }
    const double* block_data(std::size_t t, std::size_t s) const { return data_.data() + offset(t, s); }
    BlockMap block(std::size_t t, std::size_t s) { return BlockMap(block_data(t, s), rows_, cols_); }
    ConstBlockMap block(std::size_t t, std::size_t s) const { return ConstBlockMap(block_data(t, s), rows_, cols_); }

    double& operator()(std::size_t t, std::size_t s, int i = 0, int j = 0) {
        return data_[offset(t, s) + static_cast<std::size_t>(i * cols_ + j)];
    }
    double operator()(std::size_t t, std::size_t s, int i = 0, int j = 0) const {
        return data_[offset(t, s) + static_cast<std::size_t>(i * cols_ + j)];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// (P*rows) x (P*cols) matrix with block (t, s) at rows t*rows, cols s*cols.
    Eigen::MatrixXd dense() const;
    static TwoTimeKernel from_dense(const Eigen::MatrixXd& m, const TimeGrid& grid, int rows, int cols,
                                    KernelKind kind);

    /// Block (t, s) := (block(t, s) + block(s, t)^T) / 2; requires rows == cols.
    void symmetrize();
    /// Zeroes every block with s >= t.
    void enforce_causality();
    /// True when every block with s >= t is exactly zero.
    bool is_causal() const;
    bool same_shape(const TwoTimeKernel& other) const;

    bool operator==(const TwoTimeKernel& o) const {
        return grid_ == o.grid_ && rows_ == o.rows_ && cols_ == o.cols_ && kind_ == o.kind_ && data_ == o.data_;
    }

private:
    std::size_t offset(std::size_t t, std::size_t s) const {
        return (t * points_ + s) * static_cast<std::size_t>(rows_ * cols_);
    }

    TimeGrid grid_{};
    int rows_ = 0;
    int cols_ = 0;
    KernelKind kind_ = KernelKind::Covariance;
    std::size_t points_ = 0;
    std::vector<double> data_;
};

/// One rows x cols block per grid point (R_f^{t,*}, Gamma^t, C_theta^{t,*}).
class TimeSeriesBlocks {
public:
    TimeSeriesBlocks() = default;
    TimeSeriesBlocks(const TimeGrid& grid, int rows, int cols);

    const TimeGrid& grid() const { return grid_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t points() const { return points_; }

    double* block_data(std::size_t t) { return data_.data() + t * static_cast<std::size_t>(rows_ * cols_); }
    const double* block_data(std::size_t t) const {
        return data_.data() + t * static_cast<std::size_t>(rows_ * cols_);
    }
    BlockMap block(std::size_t t) { return BlockMap(block_data(t), rows_, cols_); }
    ConstBlockMap block(std::size_t t) const { return ConstBlockMap(block_data(t), rows_, cols_); }

    double& operator()(std::size_t t, int i = 0, int j = 0) { return block_data(t)[i * cols_ + j]; }
    double operator()(std::size_t t, int i = 0, int j = 0) const { return block_data(t)[i * cols_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    bool same_shape(const TimeSeriesBlocks& other) const;

    bool operator==(const TimeSeriesBlocks& o) const {
        return grid_ == o.grid_ && rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    TimeGrid grid_{};
    int rows_ = 0;
    int cols_ = 0;
    std::size_t points_ = 0;
    std::vector<double> data_;
};

/// Symmetrize, eigendecompose the full matrix, clip negative eigenvalues to 0
/// and reassemble. Throws StructuralError for response kernels and
/// NumericalError if the eigensolver fails.
TwoTimeKernel psd_project(const TwoTimeKernel& C);

/// Same projection for a dense symmetric matrix.
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m);

/// Joint projection of the (P*k + k*)-dimensional covariance of
/// (theta^0, ..., theta^N, theta*), keeping the three parts consistent.
void psd_project_joint(TwoTimeKernel& C, TimeSeriesBlocks& C_star, Eigen::MatrixXd& C_star_star);

/// Assembles the joint covariance of (w^0, ..., w^N, w*) from its parts.
Eigen::MatrixXd joint_dense(const TwoTimeKernel& C, const TimeSeriesBlocks& C_star,
                            const Eigen::MatrixXd& C_star_star);

/// max |a - b| over all entries; StructuralError on shape mismatch.
double sup_distance(const TwoTimeKernel& a, const TwoTimeKernel& b);
double sup_distance(const TimeSeriesBlocks& a, const TimeSeriesBlocks& b);

}  // namespace dmft_sgd
