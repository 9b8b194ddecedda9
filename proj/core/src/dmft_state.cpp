#include "dmft_sgd/dmft_state.hpp"

namespace dmft_sgd {

ThetaKernels::ThetaKernels(const TimeGrid& grid, int k, int k_star)
    : C_theta(grid, k, k, KernelKind::Covariance),
      C_theta_star(grid, k, k_star),
      C_star_star(Eigen::MatrixXd::Zero(k_star, k_star)),
      R_theta(grid, k, k, KernelKind::Response) {}

XiKernels::XiKernels(const TimeGrid& grid, int k, int k_star)
    : C_f(grid, k, k, KernelKind::Covariance),
      R_f(grid, k, k, KernelKind::Response),
      R_f_star(grid, k, k_star),
      Gamma(grid, k, k) {}

DMFTState free_state(const ModelSpec& spec, const TimeGrid& grid) {
    spec.validate();
    DMFTState st{ThetaKernels(grid, spec.k, spec.k_star), XiKernels(grid, spec.k, spec.k_star)};
    const Eigen::MatrixXd s00 = spec.cov_theta0();
    const Eigen::MatrixXd s0s = spec.cov_cross();
    const std::size_t P = grid.points();
    for (std::size_t t = 0; t < P; ++t) {
        st.theta.C_theta_star.block(t) = s0s;
        for (std::size_t s = 0; s < P; ++s) {
            st.theta.C_theta.block(t, s) = s00;
            if (s < t) st.theta.R_theta.block(t, s).setIdentity();
        }
    }
    st.theta.C_star_star = spec.cov_star();
    return st;
}

}  // namespace dmft_sgd
