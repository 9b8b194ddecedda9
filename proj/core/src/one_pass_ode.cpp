#include "dmft_sgd/one_pass_ode.hpp"

#include <algorithm>
#include <cmath>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/quadrature.hpp"

namespace dmft_sgd {

namespace {

struct Coefficients {
    Eigen::MatrixXd G, Rs, S;
    bool mc = false;
};

Coefficients coefficients(const ModelSpec& spec, const Eigen::MatrixXd& joint, const OnePassOdeOptions& o) {
    const int k = spec.k, ks = spec.k_star;
    Coefficients c{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, ks), Eigen::MatrixXd::Zero(k, k)};
    Eigen::VectorXd f(k);
    Eigen::MatrixXd D(k, k), Dw(k, ks);
    c.mc = for_each_gaussian_node(
        joint, spec.noise.variance, o.quadrature_order,
        [&](const Eigen::VectorXd& v, double eps, double w) {
            eval_f_raw(spec, v.data(), v.data() + k, eps, f.data(), D.data(), Dw.data());
            c.G += w * D;
            c.Rs += w * Dw;
            c.S.noalias() += w * f * f.transpose();
        },
        o.mc_samples);
    return c;
}

}  // namespace

OnePassOverlaps one_pass_overlap_ode(const ModelSpec& spec, const std::vector<double>& tau_grid,
                                     const OnePassOdeOptions& options) {
    spec.validate();
    if (!(options.tau_step > 0.0)) throw InvalidInput("tau_step must be positive");
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        if (tau_grid[i] < 0.0 || (i > 0 && tau_grid[i] < tau_grid[i - 1]))
            throw InvalidInput("tau grid must be nonnegative and nondecreasing");

    const int k = spec.k, ks = spec.k_star;
    const double lambda = spec.regularizer.lambda;
    const Eigen::MatrixXd Sss = spec.cov_star();
    Eigen::MatrixXd Q = spec.cov_theta0();
    Eigen::MatrixXd Qs = spec.cov_cross();
    const Eigen::MatrixXd Ik = Eigen::MatrixXd::Identity(k, k);

    OnePassOverlaps out;
    out.tau = tau_grid;
    double tau = 0.0;
    std::size_t next = 0;
    auto record = [&] {
        while (next < tau_grid.size() && tau_grid[next] <= tau + 1e-12) {
            out.cross.push_back(Qs);
            out.self.push_back(Q);
            ++next;
        }
    };
    record();
    Eigen::MatrixXd joint(k + ks, k + ks);
    while (next < tau_grid.size()) {
        const double h = std::min(options.tau_step, tau_grid[next] - tau);
        joint << Q, Qs, Qs.transpose(), Sss;
        const Coefficients c = coefficients(spec, joint, options);
        out.used_monte_carlo = out.used_monte_carlo || c.mc;
        const double eta = spec.eta(tau);
        const Eigen::MatrixXd Gl = c.G + lambda * Ik;
        const Eigen::MatrixXd dQs = -eta * (Gl * Qs + c.Rs * Sss);
        const Eigen::MatrixXd dQ =
            -eta * (Gl * Q + c.Rs * Qs.transpose() + Q * Gl.transpose() + Qs * c.Rs.transpose()) + eta * eta * c.S;
        Qs += h * dQs;
        Q += h * dQ;
        Q = 0.5 * (Q + Q.transpose());
        if (!Q.allFinite() || !Qs.allFinite()) throw NumericalError("one-pass overlap ODE produced non-finite values");
        tau += h;
        // snap to the requested point to avoid drift in the step count
        if (std::abs(tau - tau_grid[next]) < 1e-12) tau = tau_grid[next];
        record();
    }
    return out;
}

}  // namespace dmft_sgd
