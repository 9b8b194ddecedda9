#include "dmft_sgd/gaussian_process.hpp"

#include <cmath>
#include <random>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

void sample_driver_into(Driver driver, double kappa_bar, double delta, Rng& rng, double* out, std::size_t N) {
    const double mean = delta * kappa_bar;
    if (driver == Driver::Poisson) {
        std::poisson_distribution<int> pois(mean);
        for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<double>(pois(rng));
    } else {
        std::normal_distribution<double> normal(mean, std::sqrt(mean));
        for (std::size_t i = 0; i < N; ++i) out[i] = normal(rng);
    }
}

std::vector<double> sample_driver(Driver driver, std::size_t N, double kappa_bar, double delta, std::uint64_t seed) {
    if (!(kappa_bar > 0.0) || !(delta > 0.0)) throw InvalidInput("driver needs kappa_bar, delta > 0");
    std::vector<double> z(N);
    Rng rng = make_rng(seed);
    sample_driver_into(driver, kappa_bar, delta, rng, z.data(), N);
    return z;
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) : dim_(cov.rows()) {
    if (cov.rows() != cov.cols()) throw StructuralError("covariance must be square");
    if (!cov.allFinite()) throw KernelNotPSD("covariance has non-finite entries");
    for (Eigen::Index i = 0; i < dim_; ++i)
        if (cov(i, i) != 0.0) active_idx_.push_back(i);
    const Eigen::Index m = active();
    if (m == 0) return;

    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            sub(a, b) = 0.5 * (cov(active_idx_[a], active_idx_[b]) + cov(active_idx_[b], active_idx_[a]));
    const double mean_diag = sub.diagonal().mean();
    if (!(mean_diag > 0.0)) throw KernelNotPSD("covariance has a negative diagonal");

    for (double eps : {0.0, 1e-12, 1e-10, 1e-8}) {
        Eigen::MatrixXd trial = sub;
        trial.diagonal().array() += eps * mean_diag;
        Eigen::LLT<Eigen::MatrixXd> llt(trial);
        if (llt.info() == Eigen::Success) {
            lower_ = llt.matrixL();
            jitter_ = eps * mean_diag;
            return;
        }
    }
    throw KernelNotPSD("Cholesky factorization failed after maximal jitter");
}

void GaussianSampler::sample(Rng& rng, double* out, double* scratch) const {
    std::normal_distribution<double> normal;
    const Eigen::Index m = active();
    for (Eigen::Index i = 0; i < dim_; ++i) out[i] = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) scratch[i] = normal(rng);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double* row = lower_.data() + i * m;
        double acc = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) acc += row[j] * scratch[j];
        out[active_idx_[i]] = acc;
    }
}

Eigen::VectorXd GaussianSampler::sample(Rng& rng) const {
    Eigen::VectorXd out(dim_), scratch(std::max<Eigen::Index>(active(), 1));
    sample(rng, out.data(), scratch.data());
    return out;
}

namespace {

GPDraw unpack(const Eigen::VectorXd& v, std::size_t points, int rows, int star_dim) {
    GPDraw d;
    d.path.resize(static_cast<Eigen::Index>(points), rows);
    for (std::size_t t = 0; t < points; ++t)
        for (int i = 0; i < rows; ++i) d.path(static_cast<Eigen::Index>(t), i) = v(static_cast<Eigen::Index>(t) * rows + i);
    if (star_dim > 0) d.star = v.tail(star_dim);
    return d;
}

}  // namespace

GPDraw sample_gp(const TwoTimeKernel& C, std::uint64_t seed) {
    if (C.kind() != KernelKind::Covariance) throw StructuralError("sample_gp needs a covariance kernel");
    GaussianSampler sampler(C.dense());
    Rng rng = make_rng(seed);
    return unpack(sampler.sample(rng), C.points(), C.rows(), 0);
}

GPDraw sample_gp(const TwoTimeKernel& C, const TimeSeriesBlocks& C_star, const Eigen::MatrixXd& C_star_star,
                 std::uint64_t seed) {
    if (C.kind() != KernelKind::Covariance) throw StructuralError("sample_gp needs a covariance kernel");
    GaussianSampler sampler(joint_dense(C, C_star, C_star_star));
    Rng rng = make_rng(seed);
    return unpack(sampler.sample(rng), C.points(), C.rows(), static_cast<int>(C_star_star.rows()));
}

}  // namespace dmft_sgd
