#include "dmft_sgd/estimators.hpp"

#include <cmath>
#include <vector>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/parallel.hpp"
#include "dmft_sgd/random.hpp"
#include "dmft_sgd/trajectory.hpp"

namespace dmft_sgd {

namespace {

struct Moments {
    std::vector<double> sum, sq;
    explicit Moments(std::size_t n = 0) : sum(n, 0.0), sq(n, 0.0) {}
    void add(std::size_t i, double v) {
        sum[i] += v;
        sq[i] += v * v;
    }
    void merge(const Moments& o) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sq[i] += o.sq[i];
        }
    }
    void finish(std::size_t n, std::vector<double>& mean, std::vector<double>& se) const {
        const double dn = static_cast<double>(n);
        mean.resize(sum.size());
        se.resize(sum.size());
        for (std::size_t i = 0; i < sum.size(); ++i) {
            const double m = sum[i] / dn;
            double var = n > 1 ? (sq[i] - dn * m * m) / (dn - 1.0) : 0.0;
            if (var < 0.0) var = 0.0;
            mean[i] = m;
            se[i] = n > 1 ? std::sqrt(var / dn) : 0.0;
        }
    }
};

// mirrors the upper block triangle (t <= s) of a symmetric kernel layout
void mirror_blocks(std::vector<double>& v, std::size_t P, int k) {
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t s = t + 1; s < P; ++s)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    v[(s * P + t) * kk + static_cast<std::size_t>(j * k + i)] =
                        v[(t * P + s) * kk + static_cast<std::size_t>(i * k + j)];
}

void check_options(const McOptions& o) {
    if (o.n_samples < 1) throw InvalidInput("Monte Carlo needs at least one sample");
}

}  // namespace

XiEstimate estimate_xi_kernels(const ModelSpec& spec, const ThetaKernels& theta, const McOptions& options) {
    check_options(options);
    const XiSampler sampler(theta, spec);
    const TimeGrid& grid = sampler.grid();
    const std::size_t P = grid.points();
    const int k = spec.k, ks = spec.k_star;
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t kks = static_cast<std::size_t>(k) * ks;

    struct Acc {
        Moments cf, rf, rs, gam;
    };
    auto make = [&] { return Acc{Moments(P * P * kk), Moments(P * P * kk), Moments(P * kks), Moments(P * kk)}; };
    auto process = [&](Acc& acc, std::size_t begin, std::size_t end) {
        auto w = sampler.make_work(true);
        for (std::size_t m = begin; m < end; ++m) {
            sampler.run(derive_seed(options.seed, options.first_sample + m), w, true);
            // C_f: F^t F^s^T for t <= s
            for (std::size_t t = 1; t < P; ++t) {
                const double* Ft = w.F.data() + t * k;
                for (std::size_t s = t; s < P; ++s) {
                    const double* Fs = w.F.data() + s * k;
                    const std::size_t base = (t * P + s) * kk;
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j) acc.cf.add(base + static_cast<std::size_t>(i * k + j), Ft[i] * Fs[j]);
                }
            }
            for (std::size_t s : w.active)
                for (std::size_t t = s + 1; t < P; ++t) {
                    const std::size_t base = (t * P + s) * kk;
                    for (std::size_t i = 0; i < kk; ++i) acc.rf.add(base + i, w.rf[base + i]);
                }
            for (std::size_t i = 0; i < P * kks; ++i) acc.rs.add(i, w.rstar[i]);
            // Gamma blocks row-major from the column-major Jacobians
            for (std::size_t t = 0; t < P; ++t)
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j)
                        acc.gam.add(t * kk + static_cast<std::size_t>(i * k + j),
                                    w.dxi[t * kk + static_cast<std::size_t>(i + j * k)]);
        }
    };
    auto merge = [](Acc& into, const Acc& part) {
        into.cf.merge(part.cf);
        into.rf.merge(part.rf);
        into.rs.merge(part.rs);
        into.gam.merge(part.gam);
    };
    const Acc acc = chunked_reduce<Acc>(options.n_samples, options.chunk, resolve_threads(options.threads), make,
                                        process, merge);

    XiEstimate est{XiKernels(grid, k, ks), XiKernels(grid, k, ks), options.n_samples};
    const std::size_t n = options.n_samples;
    acc.cf.finish(n, est.mean.C_f.data(), est.std_error.C_f.data());
    mirror_blocks(est.mean.C_f.data(), P, k);
    mirror_blocks(est.std_error.C_f.data(), P, k);
    acc.rf.finish(n, est.mean.R_f.data(), est.std_error.R_f.data());
    acc.rs.finish(n, est.mean.R_f_star.data(), est.std_error.R_f_star.data());
    acc.gam.finish(n, est.mean.Gamma.data(), est.std_error.Gamma.data());

    if (options.project) {
        est.mean.C_f = psd_project(est.mean.C_f);
        // F^0 = 0 identically: keep the first block row and column exact
        for (std::size_t t = 0; t < P; ++t) {
            est.mean.C_f.block(0, t).setZero();
            est.mean.C_f.block(t, 0).setZero();
        }
    }
    if (options.shrinkage.enabled) {
        for (std::size_t t = 0; t < P; ++t)
            for (std::size_t s = 0; s < t; ++s)
                if (static_cast<double>(t - s) * grid.delta > options.shrinkage.window) {
                    est.mean.R_f.block(t, s) *= options.shrinkage.factor;
                    est.std_error.R_f.block(t, s) *= std::abs(options.shrinkage.factor);
                }
    }
    return est;
}

ThetaEstimate estimate_theta_kernels(const ModelSpec& spec, const XiKernels& xi, const McOptions& options) {
    check_options(options);
    const ThetaSampler sampler(xi, spec);
    const TimeGrid& grid = sampler.grid();
    const std::size_t P = grid.points();
    const int k = spec.k, ks = spec.k_star;
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t kks = static_cast<std::size_t>(k) * ks;

    struct Acc {
        Moments ct, cs, css;
    };
    auto make = [&] {
        return Acc{Moments(P * P * kk), Moments(P * kks), Moments(static_cast<std::size_t>(ks) * ks)};
    };
    auto process = [&](Acc& acc, std::size_t begin, std::size_t end) {
        auto w = sampler.make_work();
        for (std::size_t m = begin; m < end; ++m) {
            sampler.run(derive_seed(options.seed, options.first_sample + m), w);
            for (std::size_t t = 0; t < P; ++t) {
                const double* a = w.theta.data() + t * k;
                for (std::size_t s = t; s < P; ++s) {
                    const double* b = w.theta.data() + s * k;
                    const std::size_t base = (t * P + s) * kk;
                    for (int i = 0; i < k; ++i)
                        for (int j = 0; j < k; ++j) acc.ct.add(base + static_cast<std::size_t>(i * k + j), a[i] * b[j]);
                }
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < ks; ++j)
                        acc.cs.add(t * kks + static_cast<std::size_t>(i * ks + j), a[i] * w.theta_star[j]);
            }
            for (int i = 0; i < ks; ++i)
                for (int j = 0; j < ks; ++j)
                    acc.css.add(static_cast<std::size_t>(i * ks + j), w.theta_star[i] * w.theta_star[j]);
        }
    };
    auto merge = [](Acc& into, const Acc& part) {
        into.ct.merge(part.ct);
        into.cs.merge(part.cs);
        into.css.merge(part.css);
    };
    const Acc acc = chunked_reduce<Acc>(options.n_samples, options.chunk, resolve_threads(options.threads), make,
                                        process, merge);

    ThetaEstimate est{ThetaKernels(grid, k, ks), ThetaKernels(grid, k, ks), options.n_samples};
    const std::size_t n = options.n_samples;
    acc.ct.finish(n, est.mean.C_theta.data(), est.std_error.C_theta.data());
    mirror_blocks(est.mean.C_theta.data(), P, k);
    mirror_blocks(est.std_error.C_theta.data(), P, k);
    acc.cs.finish(n, est.mean.C_theta_star.data(), est.std_error.C_theta_star.data());
    std::vector<double> m, s;
    acc.css.finish(n, m, s);
    est.mean.C_star_star = Eigen::Map<const RowMatrix>(m.data(), ks, ks);
    est.std_error.C_star_star = Eigen::Map<const RowMatrix>(s.data(), ks, ks);
    est.mean.R_theta = sampler.r_theta();

    if (options.project) psd_project_joint(est.mean.C_theta, est.mean.C_theta_star, est.mean.C_star_star);
    return est;
}

}  // namespace dmft_sgd
