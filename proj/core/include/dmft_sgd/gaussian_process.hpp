#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/kernel.hpp"
#include "dmft_sgd/model.hpp"
#include "dmft_sgd/random.hpp"

namespace dmft_sgd {

/// N iid driver increments: Poisson(delta*kappa_bar) for SGD, N(delta*kappa_bar,
/// delta*kappa_bar) for SME.
std::vector<double> sample_driver(Driver driver, std::size_t N, double kappa_bar, double delta, std::uint64_t seed);
void sample_driver_into(Driver driver, double kappa_bar, double delta, Rng& rng, double* out, std::size_t N);

/// Reusable sampler for a mean-zero Gaussian vector with covariance `cov`.
///
/// Coordinates with exactly zero variance are dropped (they are always 0; the
/// first block of C_f is one). The rest is Cholesky-factored, adding
/// eps * mean(diag) to the diagonal for eps in {0, 1e-12, 1e-10, 1e-8};
/// KernelNotPSD is thrown if all attempts fail.
class GaussianSampler {
public:
    GaussianSampler() = default;
    explicit GaussianSampler(const Eigen::MatrixXd& cov);

    Eigen::Index dim() const { return dim_; }
    double jitter() const { return jitter_; }

    /// Writes one draw into out[0..dim). `scratch` must hold active() doubles.
    void sample(Rng& rng, double* out, double* scratch) const;
    Eigen::VectorXd sample(Rng& rng) const;
    Eigen::Index active() const { return static_cast<Eigen::Index>(active_idx_.size()); }

private:
    Eigen::Index dim_ = 0;
    std::vector<Eigen::Index> active_idx_;
    RowMatrix lower_;  // row-major Cholesky factor of the active block
    double jitter_ = 0.0;
};

struct GPDraw {
    Eigen::MatrixXd path;  // points x rows, path.row(t) = x^t
    Eigen::VectorXd star;  // empty unless star blocks were supplied
};

/// One draw of the process with covariance kernel C (and, optionally, the
/// joint star coordinate with cross blocks C_star and variance C_star_star).
GPDraw sample_gp(const TwoTimeKernel& C, std::uint64_t seed);
GPDraw sample_gp(const TwoTimeKernel& C, const TimeSeriesBlocks& C_star, const Eigen::MatrixXd& C_star_star,
                 std::uint64_t seed);

}  // namespace dmft_sgd
