#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/model.hpp"

namespace dmft_sgd {

struct OnePassOdeOptions {
    double tau_step = 1e-3;
    int quadrature_order = 40;
    /// Draws used for the expectations when the cubature dimension exceeds 3.
    std::size_t mc_samples = 20000;
};

/// Overlaps of the gamma -> infinity (one-pass) limit at the requested times.
struct OnePassOverlaps {
    std::vector<double> tau;
    std::vector<Eigen::MatrixXd> cross;  // E[theta~ theta*^T], k x k*
    std::vector<Eigen::MatrixXd> self;   // E[theta~ theta~^T], k x k
    bool used_monte_carlo = false;
};

/// Explicit Euler on the closed overlap ODEs of one-pass SGD with ridge
/// penalty lambda (taken from spec.regularizer) and learning rate spec.eta
/// evaluated at tau:
///   d/dtau Q* = -eta ((G + lambda) Q* + R* S**)
///   d/dtau Q  = -eta ((G + lambda) Q + R* Q*^T + Q (G + lambda)^T + Q* R*^T) + eta^2 E[f f^T]
/// with G = E[D_xi f], R* = E[D_w* f], expectations over (w~, w*) ~ N(0, C~) and eps.
/// `tau_grid` must be nondecreasing and start at >= 0.
OnePassOverlaps one_pass_overlap_ode(const ModelSpec& spec, const std::vector<double>& tau_grid,
                                     const OnePassOdeOptions& options = {});

}  // namespace dmft_sgd
