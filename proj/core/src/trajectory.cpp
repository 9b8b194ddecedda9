#include "dmft_sgd/trajectory.hpp"

#include <cmath>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

namespace {

void check_xi_shapes(const XiKernels& xi, const ModelSpec& spec) {
    const auto& g = xi.C_f.grid();
    if (xi.C_f.rows() != spec.k || xi.R_f.rows() != spec.k || xi.R_f_star.cols() != spec.k_star ||
        xi.Gamma.rows() != spec.k)
        throw StructuralError("xi kernels do not match the model dimensions");
    if (!(xi.R_f.grid() == g) || !(xi.R_f_star.grid() == g) || !(xi.Gamma.grid() == g))
        throw StructuralError("xi kernels live on different grids");
}

void check_theta_shapes(const ThetaKernels& th, const ModelSpec& spec) {
    const auto& g = th.C_theta.grid();
    if (th.C_theta.rows() != spec.k || th.R_theta.rows() != spec.k || th.C_theta_star.cols() != spec.k_star ||
        th.C_star_star.rows() != spec.k_star)
        throw StructuralError("theta kernels do not match the model dimensions");
    if (!(th.R_theta.grid() == g) || !(th.C_theta_star.grid() == g))
        throw StructuralError("theta kernels live on different grids");
}

}  // namespace

// ---------------------------------------------------------------- theta side

ThetaSampler::ThetaSampler(const XiKernels& xi, const ModelSpec& spec)
    : xi_(xi),
      spec_(spec),
      grid_(xi.C_f.grid()),
      k_(spec.k),
      ks_(spec.k_star),
      P_(grid_.points()),
      init_factor_(psd_sqrt(spec.init.covariance)),
      u_sampler_(xi.C_f.dense()),
      r_theta_(grid_, spec.k, spec.k, KernelKind::Response) {
    spec.validate();
    check_xi_shapes(xi, spec);
    const int k = k_;
    step_.resize(P_);
    gmat_.assign(P_ * k * k, 0.0);
    for (std::size_t r = 0; r < P_; ++r) {
        step_[r] = grid_.delta * spec.eta(grid_.time(r));
        double* G = gmat_.data() + r * k * k;
        const double* Gam = xi.Gamma.block_data(r);
        for (int i = 0; i < k * k; ++i) G[i] = spec.gamma * Gam[i];
        for (int i = 0; i < k; ++i) G[i * k + i] += spec.regularizer.lambda;
    }

    // r^{t,s} = Id - sum_{r=s+1}^{t-1} step_r [Gm^r r^{r,s} + gamma sum_{q=s+1}^{r-1} R_f^{r,q} r^{q,s}]
    using M = Eigen::MatrixXd;
    const M I = M::Identity(k, k);
    for (std::size_t s = 0; s + 1 < P_; ++s) {
        M acc = M::Zero(k, k);
        for (std::size_t t = s + 1; t < P_; ++t) {
            const M r_ts = I - acc;
            r_theta_.block(t, s) = r_ts;
            if (t + 1 >= P_) break;
            M h = ConstBlockMap(gmat_.data() + t * k * k, k, k) * r_ts;
            for (std::size_t q = s + 1; q < t; ++q)
                h += spec.gamma * xi.R_f.block(t, q) * r_theta_.block(q, s);
            acc += step_[t] * h;
        }
    }
}

ThetaSampler::Work ThetaSampler::make_work() const {
    Work w;
    w.theta.assign(P_ * k_, 0.0);
    w.theta0.assign(k_, 0.0);
    w.theta_star.assign(ks_, 0.0);
    w.u.assign(P_ * k_, 0.0);
    w.drift.assign(k_, 0.0);
    w.tmp.assign(k_, 0.0);
    w.scratch.assign(std::max<std::size_t>(P_ * k_, 1), 0.0);
    return w;
}

void ThetaSampler::run(std::uint64_t seed, Work& w) const {
    const int k = k_, ks = ks_;
    Rng rng = make_rng(seed);
    {
        Eigen::Map<Eigen::VectorXd> t0(w.theta0.data(), k), ts(w.theta_star.data(), ks);
        sample_init_row(init_factor_, rng, t0, ts);
    }
    u_sampler_.sample(rng, w.u.data(), w.scratch.data());

    const double sg = std::sqrt(spec_.gamma);
    const double gamma = spec_.gamma;
    std::fill(w.drift.begin(), w.drift.end(), 0.0);
    for (std::size_t t = 0; t < P_; ++t) {
        double* th = w.theta.data() + t * k;
        for (int i = 0; i < k; ++i) th[i] = w.theta0[i] + sg * w.u[t * k + i] - w.drift[i];
        if (t + 1 >= P_) break;
        // h = Gm^t theta^t + gamma (sum_{q<t} R_f^{t,q} theta^q + R_f^{t,*} theta*)
        const double* G = gmat_.data() + t * k * k;
        for (int i = 0; i < k; ++i) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += G[i * k + j] * th[j];
            w.tmp[i] = acc;
        }
        for (std::size_t q = 0; q < t; ++q) {
            const double* R = xi_.R_f.block_data(t, q);
            const double* tq = w.theta.data() + q * k;
            for (int i = 0; i < k; ++i) {
                double acc = 0.0;
                for (int j = 0; j < k; ++j) acc += R[i * k + j] * tq[j];
                w.tmp[i] += gamma * acc;
            }
        }
        const double* Rs = xi_.R_f_star.block_data(t);
        for (int i = 0; i < k; ++i) {
            double acc = 0.0;
            for (int j = 0; j < ks; ++j) acc += Rs[i * ks + j] * w.theta_star[j];
            w.tmp[i] += gamma * acc;
        }
        for (int i = 0; i < k; ++i) w.drift[i] += step_[t] * w.tmp[i];
    }
}

// ---------------------------------------------------------------- xi side

XiSampler::XiSampler(const ThetaKernels& theta, const ModelSpec& spec)
    : R_theta_(theta.R_theta),
      spec_(spec),
      grid_(theta.C_theta.grid()),
      k_(spec.k),
      ks_(spec.k_star),
      P_(grid_.points()),
      w_sampler_((check_theta_shapes(theta, spec),
                  joint_dense(theta.C_theta, theta.C_theta_star, theta.C_star_star))) {
    spec.validate();
    coef_.resize(P_);
    for (std::size_t r = 0; r < P_; ++r) coef_[r] = spec.eta(grid_.time(r)) / spec.kappa_bar;
}

XiSampler::Work XiSampler::make_work(bool with_rf) const {
    const std::size_t k = k_, ks = ks_;
    Work w;
    w.wpath.assign(P_ * k + ks, 0.0);
    w.scratch.assign(P_ * k + ks, 0.0);
    w.z.assign(P_ - 1, 0.0);
    w.xi.assign(P_ * k, 0.0);
    w.f.assign(P_ * k, 0.0);
    w.a.assign(P_ * k, 0.0);
    w.F.assign(P_ * k, 0.0);
    w.dxi.assign(P_ * k * k, 0.0);
    w.dws.assign(P_ * k * ks, 0.0);
    w.rstar.assign(P_ * k * ks, 0.0);
    w.bstar.assign(P_ * k * ks, 0.0);
    w.active.reserve(P_);
    if (with_rf) {
        w.rf.assign(P_ * P_ * k * k, 0.0);
        w.g.assign(P_ * P_ * k * k, 0.0);
    }
    w.tmp.assign(k * std::max(k, ks), 0.0);
    w.tmp2.assign(k * std::max(k, ks), 0.0);
    return w;
}

void XiSampler::run(std::uint64_t seed, Work& w, bool with_rf) const {
    const int k = k_, ks = ks_;
    const std::size_t P = P_;
    Rng rng = make_rng(seed);
    w_sampler_.sample(rng, w.wpath.data(), w.scratch.data());
    w.eps = sample_noise(spec_, rng);
    sample_driver_into(spec_.driver, spec_.kappa_bar, grid_.delta, rng, w.z.data(), P - 1);
    const double* wstar = w.wpath.data() + P * k;

    w.active.clear();
    for (int i = 0; i < k; ++i) w.F[i] = 0.0;
    for (std::size_t t = 0; t < P; ++t) {
        double* xi = w.xi.data() + t * k;
        for (int i = 0; i < k; ++i) xi[i] = w.wpath[t * k + i];
        // retarded sums over active r < t
        double* acc = w.tmp.data();   // k x k*, row-major
        for (int i = 0; i < k * ks; ++i) acc[i] = 0.0;
        for (std::size_t r : w.active) {
            const double* R = R_theta_.block_data(t, r);
            const double* a = w.a.data() + r * k;
            const double* b = w.bstar.data() + r * k * ks;
            for (int i = 0; i < k; ++i) {
                double s = 0.0;
                for (int j = 0; j < k; ++j) s += R[i * k + j] * a[j];
                xi[i] -= s;
                for (int c = 0; c < ks; ++c) {
                    double sb = 0.0;
                    for (int j = 0; j < k; ++j) sb += R[i * k + j] * b[j * ks + c];
                    acc[i * ks + c] += sb;
                }
            }
        }
        double* f = w.f.data() + t * k;
        double* D = w.dxi.data() + t * k * k;
        double* Dw = w.dws.data() + t * k * ks;
        eval_f_raw(spec_, xi, wstar, w.eps, f, D, Dw);

        // r_f^{t,*} = -D_xi f^t acc + D_{w*} f^t
        double* rs = w.rstar.data() + t * k * ks;
        for (int i = 0; i < k; ++i)
            for (int c = 0; c < ks; ++c) {
                double s = 0.0;
                for (int j = 0; j < k; ++j) s += D[i + j * k] * acc[j * ks + c];
                rs[i * ks + c] = -s + Dw[i + c * k];
            }

        double* a = w.a.data() + t * k;
        double* b = w.bstar.data() + t * k * ks;
        const bool live = t + 1 < P && w.z[t] != 0.0;
        const double cz = live ? coef_[t] * w.z[t] : 0.0;
        for (int i = 0; i < k; ++i) a[i] = cz * f[i];
        for (int i = 0; i < k * ks; ++i) b[i] = cz * rs[i];
        if (live) w.active.push_back(t);
        if (t + 1 < P)
            for (int i = 0; i < k; ++i) w.F[(t + 1) * k + i] = w.F[t * k + i] + a[i];
    }

    if (!with_rf) return;

    // r_f^{t,s} = -D_xi f^t sum_{active r in [s, t)} R_theta^{t,r} g_{r,s},
    // g_{s,s} = c_s z^s D_xi f^s,  g_{r,s} = c_r z^r r_f^{r,s}.
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t n_active = w.active.size();
    for (std::size_t t = 0; t < P; ++t) {
        const double* D = w.dxi.data() + t * kk;
        // active sources s < t are a prefix of the active list
        std::size_t end = 0;
        while (end < n_active && w.active[end] < t) ++end;
        for (std::size_t si = 0; si < end; ++si) {
            const std::size_t s = w.active[si];
            double* sum = w.tmp.data();
            for (std::size_t i = 0; i < kk; ++i) sum[i] = 0.0;
            for (std::size_t ri = si; ri < end; ++ri) {
                const std::size_t r = w.active[ri];
                const double* R = R_theta_.block_data(t, r);
                const double* g = w.g.data() + (r * P + s) * kk;
                for (int i = 0; i < k; ++i)
                    for (int c = 0; c < k; ++c) {
                        double v = 0.0;
                        for (int j = 0; j < k; ++j) v += R[i * k + j] * g[j * k + c];
                        sum[i * k + c] += v;
                    }
            }
            double* out = w.rf.data() + (t * P + s) * kk;
            for (int i = 0; i < k; ++i)
                for (int c = 0; c < k; ++c) {
                    double v = 0.0;
                    for (int j = 0; j < k; ++j) v += D[i + j * k] * sum[j * k + c];
                    out[i * k + c] = -v;
                }
        }
        const bool live = end < n_active && w.active[end] == t;
        if (live) {
            const double cz = coef_[t] * w.z[t];
            for (std::size_t si = 0; si < end; ++si) {
                const std::size_t s = w.active[si];
                const double* src = w.rf.data() + (t * P + s) * kk;
                double* g = w.g.data() + (t * P + s) * kk;
                for (std::size_t i = 0; i < kk; ++i) g[i] = cz * src[i];
            }
            double* g = w.g.data() + (t * P + t) * kk;
            for (int i = 0; i < k; ++i)
                for (int c = 0; c < k; ++c) g[i * k + c] = cz * D[i + c * k];
        }
    }
}

// ---------------------------------------------------------------- one-shot API

TrajectorySample sample_theta_trajectory(const DMFTState& state, const ModelSpec& spec, std::uint64_t seed) {
    ThetaSampler sampler(state.xi, spec);
    auto w = sampler.make_work();
    sampler.run(seed, w);
    const auto P = static_cast<Eigen::Index>(sampler.grid().points());
    TrajectorySample out;
    out.theta_path = Eigen::Map<const RowMatrix>(w.theta.data(), P, spec.k);
    out.r_theta = sampler.r_theta();
    out.noise.theta0 = Eigen::Map<const Eigen::VectorXd>(w.theta0.data(), spec.k);
    out.noise.theta_star = Eigen::Map<const Eigen::VectorXd>(w.theta_star.data(), spec.k_star);
    out.noise.u_path = Eigen::Map<const RowMatrix>(w.u.data(), P, spec.k);
    return out;
}

TrajectorySample sample_xi_trajectory(const DMFTState& state, const ModelSpec& spec, std::uint64_t seed) {
    XiSampler sampler(state.theta, spec);
    auto w = sampler.make_work(true);
    sampler.run(seed, w, true);
    const TimeGrid& grid = sampler.grid();
    const std::size_t P = grid.points();
    const int k = spec.k, ks = spec.k_star;
    TrajectorySample out;
    out.xi_path = Eigen::Map<const RowMatrix>(w.xi.data(), static_cast<Eigen::Index>(P), k);
    out.r_f = TwoTimeKernel(grid, k, k, KernelKind::Response);
    for (std::size_t s : w.active)
        for (std::size_t t = s + 1; t < P; ++t)
            std::copy_n(w.rf.data() + (t * P + s) * k * k, k * k, out.r_f.block_data(t, s));
    out.r_f_star = TimeSeriesBlocks(grid, k, ks);
    out.r_f_star.data() = w.rstar;
    out.noise.w_path = Eigen::Map<const RowMatrix>(w.wpath.data(), static_cast<Eigen::Index>(P), k);
    out.noise.w_star = Eigen::Map<const Eigen::VectorXd>(w.wpath.data() + P * k, ks);
    out.noise.eps = w.eps;
    out.noise.z = w.z;
    return out;
}

}  // namespace dmft_sgd
