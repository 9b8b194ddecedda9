#pragma once

#include <Eigen/Dense>

#include "dmft_sgd/dmft_state.hpp"
#include "dmft_sgd/model.hpp"

namespace dmft_sgd {

/// Intermediate quantities of the closed-form linear map (k = 1). All
/// matrices are P x P over grid points.
struct LinearAux {
    Eigen::MatrixXd K;           // discrete resolvent of B^{t,r} = -delta eta_r R_theta^{t,r}
    Eigen::MatrixXd Cbar_theta;  // covariance of wbar^t = w^t - sigma*(w*, eps)
    Eigen::MatrixXd W;           // (I + K) Cbar_theta (I + K)^T
    Eigen::VectorXd D;           // diagonal of Cbar_xi
    Eigen::MatrixXd Cbar_xi;     // covariance of xibar^t = xi^t - sigma*(w*, eps)
};

/// Closed-form (C_theta, R_theta) -> (C_f, R_f, R_f*, Gamma) for squared loss,
/// linear activation and k = 1. Exact for the discrete recursions: the
/// result equals the Monte Carlo expectation for either driver.
/// Throws UnsupportedModel for other model families.
XiKernels linear_map(const ThetaKernels& theta, const ModelSpec& spec, LinearAux* aux = nullptr);

/// Residual of the diagonal equation
///   D^t = W^{t,t} + (delta kappa_bar)^{-1} sum_{q<t} (K^{t,q})^2 D^q
/// relative to max |D|.
double linear_diagonal_residual(const LinearAux& aux, double delta, double kappa_bar);

/// Closed-form (C_f, R_f, R_f*, Gamma) -> (C_theta with star blocks, R_theta)
/// for a ridge regularizer (any k, k*).
ThetaKernels ridge_map(const XiKernels& xi, const ModelSpec& spec);

/// Predicted squared-loss training loss 1/2 E[(xi^t - y)^2] from the linear map.
Eigen::VectorXd linear_train_loss(const LinearAux& aux);

}  // namespace dmft_sgd
