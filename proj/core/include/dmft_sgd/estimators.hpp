#pragma once

#include <cstddef>
#include <cstdint>

#include "dmft_sgd/dmft_state.hpp"
#include "dmft_sgd/model.hpp"

namespace dmft_sgd {

/// Optional damping of the Monte Carlo R_f estimate: blocks with
/// (t - s) * delta > window are multiplied by factor. Off by default.
struct RfShrinkage {
    bool enabled = false;
    double window = 0.0;
    double factor = 1.0;
};

struct McOptions {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    /// Sample m uses the stream derive_seed(seed, first_sample + m), so a run
    /// can be split into pieces that reproduce the draws of one large run.
    std::uint64_t first_sample = 0;
    int threads = 0;          // 0: DMFT_SGD_THREADS or hardware concurrency
    std::size_t chunk = 256;  // reduction chunk; fixed so results do not depend on threads
    bool project = true;      // PSD-project covariance estimates
    RfShrinkage shrinkage;
};

struct XiEstimate {
    XiKernels mean;
    XiKernels std_error;  // standard error of each entry of the mean
    std::size_t n_samples = 0;
};

struct ThetaEstimate {
    ThetaKernels mean;
    ThetaKernels std_error;
    std::size_t n_samples = 0;
};

/// Monte Carlo estimate of (C_f, R_f, R_f*, Gamma) from draws of the xi-process
/// driven by (C_theta with star blocks, R_theta).
XiEstimate estimate_xi_kernels(const ModelSpec& spec, const ThetaKernels& theta, const McOptions& options);

/// Monte Carlo estimate of (C_theta with star blocks, R_theta) from draws of
/// the theta-process driven by (C_f, R_f, R_f*, Gamma). R_theta is
/// deterministic for ridge regularizers and has zero standard error.
ThetaEstimate estimate_theta_kernels(const ModelSpec& spec, const XiKernels& xi, const McOptions& options);

}  // namespace dmft_sgd
