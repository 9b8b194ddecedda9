#pragma once

#include <Eigen/Dense>

#include "dmft_sgd/kernel.hpp"
#include "dmft_sgd/model.hpp"
#include "dmft_sgd/time_grid.hpp"

namespace dmft_sgd {

/// Output of the theta-side map: the law of (theta^t, theta*) to second order
/// and the theta response. R_theta is stored as the discrete response itself
/// (R_theta^{s+1,s} = Id), i.e. with the continuous-time normalization.
struct ThetaKernels {
    TwoTimeKernel C_theta;        // k x k, covariance
    TimeSeriesBlocks C_theta_star;  // k x k*, E[theta^t theta*^T]
    Eigen::MatrixXd C_star_star;  // k* x k*
    TwoTimeKernel R_theta;        // k x k, response

    ThetaKernels() = default;
    ThetaKernels(const TimeGrid& grid, int k, int k_star);

    bool operator==(const ThetaKernels& o) const {
        return C_theta == o.C_theta && C_theta_star == o.C_theta_star && C_star_star == o.C_star_star &&
               R_theta == o.R_theta;
    }
};

/// Output of the xi-side map. R_f carries the discrete normalization: its
/// blocks are approximately delta times the continuous response density.
struct XiKernels {
    TwoTimeKernel C_f;          // k x k, covariance, C_f^{0,0} = 0
    TwoTimeKernel R_f;          // k x k, response
    TimeSeriesBlocks R_f_star;  // k x k*
    TimeSeriesBlocks Gamma;     // k x k

    XiKernels() = default;
    XiKernels(const TimeGrid& grid, int k, int k_star);

    bool operator==(const XiKernels& o) const {
        return C_f == o.C_f && R_f == o.R_f && R_f_star == o.R_f_star && Gamma == o.Gamma;
    }
};

struct DMFTState {
    ThetaKernels theta;
    XiKernels xi;

    const TimeGrid& grid() const { return theta.C_theta.grid(); }
    int k() const { return theta.C_theta.rows(); }
    int k_star() const { return theta.C_theta_star.cols(); }

    bool operator==(const DMFTState& o) const { return theta == o.theta && xi == o.xi; }
};

/// Kernels of the eta = 0 dynamics: theta^t = theta^0 for all t, causal
/// identity response, and a vanishing xi side except Gamma^t = E[D_xi f] which
/// is left at zero (it is recomputed by the first xi-map).
DMFTState free_state(const ModelSpec& spec, const TimeGrid& grid);

}  // namespace dmft_sgd
