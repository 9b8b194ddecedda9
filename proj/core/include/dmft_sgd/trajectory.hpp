#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/dmft_state.hpp"
#include "dmft_sgd/gaussian_process.hpp"
#include "dmft_sgd/kernel.hpp"
#include "dmft_sgd/model.hpp"

namespace dmft_sgd {

/// One Monte Carlo draw of the effective processes. sample_theta_trajectory
/// fills the theta half, sample_xi_trajectory the xi half; the other half is
/// left empty.
struct TrajectorySample {
    Eigen::MatrixXd theta_path;   // points x k
    Eigen::MatrixXd xi_path;      // points x k
    TwoTimeKernel r_theta;        // causal
    TwoTimeKernel r_f;            // causal
    TimeSeriesBlocks r_f_star;

    struct Noise {
        Eigen::VectorXd theta0;
        Eigen::VectorXd theta_star;
        Eigen::MatrixXd u_path;   // points x k
        Eigen::MatrixXd w_path;   // points x k
        Eigen::VectorXd w_star;
        double eps = 0.0;
        std::vector<double> z;    // N increments z^0 .. z^{N-1}
    } noise;
};

/// Precomputed theta-side sampler for fixed (C_f, R_f, R_f*, Gamma).
///
/// theta^t = theta^0 - sum_{r<t} delta eta_r (gamma Gamma^r theta^r + lambda theta^r
///           + gamma sum_{q<r} R_f^{r,q} theta^q + gamma R_f^{r,*} theta*) + sqrt(gamma) u^t
///
/// With a ridge regularizer D g = lambda Id is constant, so the response r_theta
/// is deterministic and computed once here.
class ThetaSampler {
public:
    ThetaSampler(const XiKernels& xi, const ModelSpec& spec);

    struct Work {
        std::vector<double> theta;      // points * k
        std::vector<double> theta0;     // k
        std::vector<double> theta_star; // k*
        std::vector<double> u;          // points * k
        std::vector<double> drift;      // k
        std::vector<double> tmp;        // k
        std::vector<double> scratch;    // GP scratch
    };

    Work make_work() const;
    void run(std::uint64_t seed, Work& w) const;

    const TwoTimeKernel& r_theta() const { return r_theta_; }
    const TimeGrid& grid() const { return grid_; }
    int k() const { return k_; }
    int k_star() const { return ks_; }

private:
    XiKernels xi_;
    ModelSpec spec_;
    TimeGrid grid_;
    int k_, ks_;
    std::size_t P_;
    std::vector<double> step_;   // delta * eta_r
    std::vector<double> gmat_;   // gamma Gamma^r + lambda Id, per r, row-major
    Eigen::MatrixXd init_factor_;
    GaussianSampler u_sampler_;
    TwoTimeKernel r_theta_;
};

/// Precomputed xi-side sampler for fixed (C_theta with star blocks, R_theta).
///
/// xi^t = w^t - sum_{r<t} (eta_r / kappa_bar) R_theta^{t,r} f(xi^r, w*, eps) z^r
///
/// together with the responses r_f^{t,*} and r_f^{t,s}. Terms with z^r = 0 are
/// skipped, which makes the Poisson driver cheap.
class XiSampler {
public:
    XiSampler(const ThetaKernels& theta, const ModelSpec& spec);

    struct Work {
        std::vector<double> wpath;   // points * k + k*  (w^0..w^N, w*)
        std::vector<double> scratch;
        std::vector<double> z;       // N
        double eps = 0.0;
        std::vector<double> xi;      // points * k
        std::vector<double> f;       // points * k
        std::vector<double> a;       // points * k: (eta_r/kappa) f^r z^r
        std::vector<double> F;       // points * k: sum_{r<t} a_r
        std::vector<double> dxi;     // points * k*k, column-major (as eval_f_raw)
        std::vector<double> dws;     // points * k*k*, column-major
        std::vector<double> rstar;   // points * k*k*, row-major
        std::vector<double> bstar;   // points * k*k*: (eta_r/kappa) z^r r*^r
        std::vector<std::size_t> active;  // r with z^r != 0, increasing
        // r_f for active source times: rf[(t * P + s) * k*k], valid for active s < t
        std::vector<double> rf;
        std::vector<double> g;       // (eta_r/kappa) z^r r_f^{r,s} for active r >= s
        std::vector<double> tmp;     // k*k*
        std::vector<double> tmp2;
    };

    Work make_work(bool with_rf) const;
    void run(std::uint64_t seed, Work& w, bool with_rf) const;

    const TimeGrid& grid() const { return grid_; }
    int k() const { return k_; }
    int k_star() const { return ks_; }
    const ModelSpec& spec() const { return spec_; }

private:
    TwoTimeKernel R_theta_;
    ModelSpec spec_;
    TimeGrid grid_;
    int k_, ks_;
    std::size_t P_;
    std::vector<double> coef_;  // eta_r / kappa_bar
    GaussianSampler w_sampler_;
};

TrajectorySample sample_theta_trajectory(const DMFTState& state, const ModelSpec& spec, std::uint64_t seed);
TrajectorySample sample_xi_trajectory(const DMFTState& state, const ModelSpec& spec, std::uint64_t seed);

}  // namespace dmft_sgd
