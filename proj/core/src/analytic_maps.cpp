#include "dmft_sgd/analytic_maps.hpp"

#include <algorithm>
#include <cmath>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/quadrature.hpp"
#include "dmft_sgd/resolvent.hpp"

namespace dmft_sgd {

XiKernels linear_map(const ThetaKernels& theta, const ModelSpec& spec, LinearAux* aux) {
    if (!spec.is_linear_squared()) throw UnsupportedModel("linear_map needs squared loss and linear activation");
    if (spec.k != 1) throw UnsupportedModel("linear_map is implemented for k = 1");
    spec.validate();
    const TimeGrid& grid = theta.C_theta.grid();
    const std::size_t P = grid.points();
    const Eigen::Index n = static_cast<Eigen::Index>(P);
    const int ks = spec.k_star;
    const double delta = grid.delta;
    const double dk = delta * spec.kappa_bar;

    std::vector<double> eta(P);
    for (std::size_t r = 0; r < P; ++r) eta[r] = spec.eta(grid.time(r));

    // K: discrete resolvent of B^{t,r} = -delta eta_r R_theta^{t,r}
    TwoTimeKernel A(grid, 1, 1, KernelKind::Response);
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t s = 0; s < t; ++s) A(t, s) = -eta[s] * theta.R_theta(t, s);
    const TwoTimeKernel Kd = volterra_resolvent(A);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t s = 0; s < t; ++s) K(t, s) = delta * Kd(t, s);

    // covariance of wbar^t = w^t - y, using E[w^t y] = C^{t,*} (C**)^+ E[w* y]
    const TeacherMoments tm = teacher_moments(spec, theta.C_star_star);
    Eigen::VectorXd proj;
    if (spec.has_linear_teacher())
        proj = Eigen::VectorXd::Ones(ks);
    else
        proj = theta.C_star_star.completeOrthogonalDecomposition().pseudoInverse() * tm.cross;
    Eigen::VectorXd a(n);
    for (std::size_t t = 0; t < P; ++t) {
        double v = 0.0;
        for (int j = 0; j < ks; ++j) v += theta.C_theta_star(t, 0, j) * proj(j);
        a(static_cast<Eigen::Index>(t)) = v;
    }
    const Eigen::MatrixXd C = theta.C_theta.dense();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd Cbar = C - a * ones.transpose() - ones * a.transpose();
    Cbar.array() += tm.second;

    Eigen::MatrixXd L = K;
    L.diagonal().array() += 1.0;
    const Eigen::MatrixXd W = L * Cbar * L.transpose();

    // diagonal of Cbar_xi by forward substitution; the jump term only feeds
    // from earlier diagonals
    Eigen::VectorXd D(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        double s = 0.0;
        for (Eigen::Index q = 0; q < t; ++q) s += K(t, q) * K(t, q) * D(q);
        D(t) = W(t, t) + s / dk;
    }
    const Eigen::MatrixXd KD = K * D.asDiagonal();
    const Eigen::MatrixXd Cbar_xi = W + KD * K.transpose() / dk;

    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index t = 0; t < n; ++t)
        for (Eigen::Index r = 0; r < t; ++r) E(t, r) = delta * eta[static_cast<std::size_t>(r)];
    const Eigen::MatrixXd inner = W + L * D.asDiagonal() * L.transpose() / dk;
    Eigen::MatrixXd Cf = E * inner * E.transpose();
    Cf = 0.5 * (Cf + Cf.transpose());

    XiKernels out(grid, 1, ks);
    for (std::size_t t = 0; t < P; ++t) {
        const Eigen::Index ti = static_cast<Eigen::Index>(t);
        out.Gamma(t) = 1.0;
        double row = 1.0;
        for (std::size_t s = 0; s < P; ++s) {
            const Eigen::Index si = static_cast<Eigen::Index>(s);
            out.C_f(t, s) = (t == 0 || s == 0) ? 0.0 : Cf(ti, si);
            if (s < t) {
                out.R_f(t, s) = K(ti, si);
                row += K(ti, si);
            }
        }
        for (int j = 0; j < ks; ++j) out.R_f_star(t, 0, j) = -row * tm.grad(j);
    }

    if (aux) {
        aux->K = K;
        aux->Cbar_theta = Cbar;
        aux->W = W;
        aux->D = D;
        aux->Cbar_xi = Cbar_xi;
    }
    return out;
}

double linear_diagonal_residual(const LinearAux& aux, double delta, double kappa_bar) {
    const Eigen::Index n = aux.D.size();
    const double dk = delta * kappa_bar;
    double res = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        double s = 0.0;
        for (Eigen::Index q = 0; q < t; ++q) s += aux.K(t, q) * aux.K(t, q) * aux.Cbar_xi(q, q);
        res = std::max(res, std::abs(aux.W(t, t) + s / dk - aux.Cbar_xi(t, t)));
    }
    return res / std::max(1.0, aux.D.cwiseAbs().maxCoeff());
}

Eigen::VectorXd linear_train_loss(const LinearAux& aux) { return 0.5 * aux.Cbar_xi.diagonal(); }

ThetaKernels ridge_map(const XiKernels& xi, const ModelSpec& spec) {
    spec.validate();
    const TimeGrid& grid = xi.C_f.grid();
    const std::size_t P = grid.points();
    const int k = spec.k, ks = spec.k_star;
    if (xi.C_f.rows() != k || xi.R_f_star.cols() != ks) throw StructuralError("xi kernels do not match (k, k*)");
    const double delta = grid.delta;
    const double gamma = spec.gamma;
    const double lambda = spec.regularizer.lambda;
    using M = Eigen::MatrixXd;
    const M I = M::Identity(k, k);

    std::vector<double> eta(P);
    for (std::size_t r = 0; r < P; ++r) eta[r] = spec.eta(grid.time(r));

    // A^{t,q} = -eta_q (gamma Gamma^q + lambda) - gamma sum_{r=q+1}^{t-1} eta_r R_f^{r,q}
    TwoTimeKernel A(grid, k, k, KernelKind::Response);
    for (std::size_t q = 0; q < P; ++q) {
        const M local = -eta[q] * (gamma * M(xi.Gamma.block(q)) + lambda * I);
        M tail = M::Zero(k, k);
        for (std::size_t t = q + 1; t < P; ++t) {
            A.block(t, q) = local - gamma * tail;
            tail += eta[t] * M(xi.R_f.block(t, q));
        }
    }
    const TwoTimeKernel Kd = volterra_resolvent(A);

    const Eigen::Index n = static_cast<Eigen::Index>(P) * k;
    M L = M::Identity(n, n);
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t q = 0; q < t; ++q)
            L.block(static_cast<Eigen::Index>(t) * k, static_cast<Eigen::Index>(q) * k, k, k) = delta * Kd.block(t, q);

    // b^t = theta^0 - Pm^t theta* + sqrt(gamma) u^t
    const M S00 = spec.cov_theta0(), S0s = spec.cov_cross(), Sss = spec.cov_star();
    std::vector<M> Pm(P, M::Zero(k, ks));
    for (std::size_t t = 1; t < P; ++t) Pm[t] = Pm[t - 1] + gamma * delta * eta[t - 1] * M(xi.R_f_star.block(t - 1));

    M Cb(n, n), Cbs(n, ks);
    for (std::size_t t = 0; t < P; ++t) {
        const Eigen::Index ti = static_cast<Eigen::Index>(t) * k;
        Cbs.block(ti, 0, k, ks) = S0s - Pm[t] * Sss;
        for (std::size_t s = 0; s < P; ++s) {
            const Eigen::Index si = static_cast<Eigen::Index>(s) * k;
            Cb.block(ti, si, k, k) = S00 - S0s * Pm[s].transpose() - Pm[t] * S0s.transpose() +
                                     Pm[t] * Sss * Pm[s].transpose() + gamma * M(xi.C_f.block(t, s));
        }
    }
    const M Ct = L * Cb * L.transpose();
    const M Cts = L * Cbs;

    ThetaKernels out(grid, k, ks);
    out.C_theta = TwoTimeKernel::from_dense(0.5 * (Ct + Ct.transpose()), grid, k, k, KernelKind::Covariance);
    out.C_theta.symmetrize();
    for (std::size_t t = 0; t < P; ++t) out.C_theta_star.block(t) = Cts.block(static_cast<Eigen::Index>(t) * k, 0, k, ks);
    out.C_star_star = Sss;

    // R_theta^{t,s} = Id + delta sum_{q=s+1}^{t-1} Kd^{t,q}
    for (std::size_t t = 0; t < P; ++t) {
        M acc = I;
        for (std::size_t s = t; s-- > 0;) {
            out.R_theta.block(t, s) = acc;
            acc += delta * M(Kd.block(t, s));
        }
    }
    return out;
}

}  // namespace dmft_sgd
