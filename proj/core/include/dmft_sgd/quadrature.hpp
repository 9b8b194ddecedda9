#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/model.hpp"

namespace dmft_sgd {

/// Gauss-Hermite rule for the standard normal weight, from the Golub-Welsch
/// eigenproblem of the Hermite Jacobi matrix. Weights sum to 1.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_hermite(int order);

/// Calls fn(v, eps, weight) over a cubature for v ~ N(0, cov) and, when
/// eps_variance > 0, an independent eps ~ N(0, eps_variance). Tensor
/// Gauss-Hermite of the given order is used while the total dimension is at
/// most 3; otherwise `mc_samples` Monte Carlo draws with equal weights.
/// Returns true when the Monte Carlo fallback was used.
bool for_each_gaussian_node(const Eigen::MatrixXd& cov, double eps_variance, int order,
                            const std::function<void(const Eigen::VectorXd&, double, double)>& fn,
                            std::size_t mc_samples = 200000, std::uint64_t seed = 0x5eed);

/// Teacher statistics under w* ~ N(0, C**), eps ~ noise law:
///   cross = E[w* y], second = E[y^2], grad = E[grad_{w*} sigma*].
struct TeacherMoments {
    Eigen::VectorXd cross;
    double second = 0.0;
    Eigen::VectorXd grad;
};

TeacherMoments teacher_moments(const ModelSpec& spec, const Eigen::MatrixXd& C_star_star, int order = 40);

}  // namespace dmft_sgd
