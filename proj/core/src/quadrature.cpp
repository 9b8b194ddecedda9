#include "dmft_sgd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/random.hpp"

namespace dmft_sgd {

GaussRule gauss_hermite(int order) {
    if (order < 1) throw InvalidInput("quadrature order must be >= 1");
    // probabilists' Hermite recurrence: x He_n = He_{n+1} + n He_{n-1}
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigensolve failed");
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    double total = 0.0;
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;
        total += rule.weights[i];
    }
    for (double& w : rule.weights) w /= total;
    return rule;
}

bool for_each_gaussian_node(const Eigen::MatrixXd& cov, double eps_variance, int order,
                            const std::function<void(const Eigen::VectorXd&, double, double)>& fn,
                            std::size_t mc_samples, std::uint64_t seed) {
    const int m = static_cast<int>(cov.rows());
    const bool with_eps = eps_variance > 0.0;
    const int dim = m + (with_eps ? 1 : 0);
    const Eigen::MatrixXd root = psd_sqrt(cov);
    const double eps_sd = std::sqrt(std::max(eps_variance, 0.0));
    Eigen::VectorXd g(m), v(m);

    if (dim > 3) {
        Rng rng = make_rng(seed);
        std::normal_distribution<double> normal;
        const double w = 1.0 / static_cast<double>(mc_samples);
        for (std::size_t n = 0; n < mc_samples; ++n) {
            for (int i = 0; i < m; ++i) g(i) = normal(rng);
            v.noalias() = root * g;
            const double eps = with_eps ? eps_sd * normal(rng) : 0.0;
            fn(v, eps, w);
        }
        return true;
    }

    // 20 nodes per axis are plenty for the smooth integrands here and keep the
    // 3-d tensor rule at 8000 points
    if (dim == 3) order = std::min(order, 20);
    const GaussRule rule = gauss_hermite(order);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < m; ++i) {
            g(i) = rule.nodes[idx[i]];
            w *= rule.weights[idx[i]];
        }
        double eps = 0.0;
        if (with_eps) {
            eps = eps_sd * rule.nodes[idx[m]];
            w *= rule.weights[idx[m]];
        }
        v.noalias() = root * g;
        fn(v, eps, w);
        int d = 0;
        while (d < dim && ++idx[d] == order) idx[d++] = 0;
        if (d == dim) break;
    }
    return false;
}

TeacherMoments teacher_moments(const ModelSpec& spec, const Eigen::MatrixXd& C_star_star, int order) {
    const int ks = spec.k_star;
    TeacherMoments tm{Eigen::VectorXd::Zero(ks), 0.0, Eigen::VectorXd::Zero(ks)};
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ks);
    const double s2 = spec.noise.variance;
    if (spec.teacher.kind == TeacherKind::Identity) {
        tm.cross = C_star_star * ones;
        tm.second = ones.dot(C_star_star * ones);
        tm.grad = ones;
        return tm;
    }
    if (spec.teacher.kind == TeacherKind::LinearNoisy) {
        // y = 1^T w* + k* eps
        tm.cross = C_star_star * ones;
        tm.second = ones.dot(C_star_star * ones) + static_cast<double>(ks * ks) * s2;
        tm.grad = ones;
        return tm;
    }
    for_each_gaussian_node(C_star_star, s2, order, [&](const Eigen::VectorXd& w, double eps, double wt) {
        const double y = label_value(spec, w, eps);
        tm.cross += wt * y * w;
        tm.second += wt * y * y;
        tm.grad += wt * label_gradient(spec, w, eps);
    });
    return tm;
}

}  // namespace dmft_sgd
