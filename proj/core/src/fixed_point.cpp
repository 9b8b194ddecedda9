#include "dmft_sgd/fixed_point.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "dmft_sgd/analytic_maps.hpp"
#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/parallel.hpp"
#include "dmft_sgd/random.hpp"
#include "dmft_sgd/trajectory.hpp"

namespace dmft_sgd {

std::string to_string(SolveMode m) {
    switch (m) {
        case SolveMode::Analytic: return "analytic";
        case SolveMode::MonteCarlo: return "monte_carlo";
        case SolveMode::Hybrid: return "hybrid";
    }
    return "?";
}

SolveMode solve_mode_from_string(const std::string& s) {
    if (s == "analytic") return SolveMode::Analytic;
    if (s == "monte_carlo") return SolveMode::MonteCarlo;
    if (s == "hybrid") return SolveMode::Hybrid;
    throw InvalidInput("unknown dmft mode '" + s + "' (expected analytic|monte_carlo|hybrid)");
}

void ConvergenceReport::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    os << "iteration,distance,wall_time\n";
    for (std::size_t i = 0; i < distance.size(); ++i)
        os << (i + 1) << ',' << format_double(distance[i]) << ',' << format_double(wall_time[i]) << '\n';
}

double theta_distance(const ThetaKernels& a, const ThetaKernels& b) {
    if (a.C_star_star.rows() != b.C_star_star.rows() || a.C_star_star.cols() != b.C_star_star.cols())
        throw StructuralError("star blocks differ in shape");
    double d = std::max(sup_distance(a.C_theta, b.C_theta), sup_distance(a.R_theta, b.R_theta));
    d = std::max(d, sup_distance(a.C_theta_star, b.C_theta_star));
    if (a.C_star_star.size() > 0) d = std::max(d, (a.C_star_star - b.C_star_star).cwiseAbs().maxCoeff());
    return d;
}

double kernel_distance(const DMFTState& a, const DMFTState& b) {
    double d = theta_distance(a.theta, b.theta);
    d = std::max(d, sup_distance(a.xi.C_f, b.xi.C_f));
    d = std::max(d, sup_distance(a.xi.R_f, b.xi.R_f));
    d = std::max(d, sup_distance(a.xi.R_f_star, b.xi.R_f_star));
    d = std::max(d, sup_distance(a.xi.Gamma, b.xi.Gamma));
    return d;
}

namespace {

void blend(std::vector<double>& y, const std::vector<double>& t, double w) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - w) * y[i] + w * t[i];
}

ThetaKernels damped(const ThetaKernels& y, const ThetaKernels& ty, double w) {
    if (w == 1.0) return ty;
    ThetaKernels out = y;
    blend(out.C_theta.data(), ty.C_theta.data(), w);
    blend(out.R_theta.data(), ty.R_theta.data(), w);
    blend(out.C_theta_star.data(), ty.C_theta_star.data(), w);
    out.C_star_star = (1.0 - w) * y.C_star_star + w * ty.C_star_star;
    return out;
}

double max_entry(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

SolveResult solve(const ModelSpec& spec, const TimeGrid& grid, const SolveOptions& options) {
    spec.validate();
    if (options.max_iters < 1) throw InvalidInput("max_iters must be >= 1");
    if (!(options.damping > 0.0 && options.damping <= 1.0)) throw InvalidInput("damping must lie in (0, 1]");
    if (options.tol < 0.0) throw InvalidInput("tol must be > 0 (or 0 for the default)");
    if (options.mode == SolveMode::Analytic && !(spec.is_linear_squared() && spec.k == 1))
        throw UnsupportedModel("analytic mode needs squared loss, linear activation and k = 1");
    if (options.mode != SolveMode::Analytic && options.mc_samples < 2)
        throw InvalidInput("Monte Carlo modes need mc_samples >= 2");

    const auto start = std::chrono::steady_clock::now();
    McOptions xi_mc;
    xi_mc.n_samples = options.mc_samples;
    xi_mc.seed = derive_seed(options.seed, "xi-map");
    xi_mc.threads = options.threads;
    xi_mc.shrinkage = options.shrinkage;
    McOptions th_mc = xi_mc;
    th_mc.seed = derive_seed(options.seed, "theta-map");

    SolveResult result;
    result.state = free_state(spec, grid);
    result.report.damping = options.damping;
    double omega = options.damping;

    auto xi_map = [&](const ThetaKernels& y) {
        if (options.mode == SolveMode::Analytic) return linear_map(y, spec);
        XiEstimate e = estimate_xi_kernels(spec, y, xi_mc);
        result.xi_std_error = e.std_error;
        return e.mean;
    };
    double mc_tol = 0.0;
    auto theta_map = [&](const XiKernels& xi) {
        if (options.mode != SolveMode::MonteCarlo) {
            if (options.mode == SolveMode::Hybrid && result.xi_std_error)
                mc_tol = 3.0 * spec.gamma * max_entry(result.xi_std_error->C_f.data());
            return ridge_map(xi, spec);
        }
        ThetaEstimate e = estimate_theta_kernels(spec, xi, th_mc);
        mc_tol = 3.0 * std::max(max_entry(e.std_error.C_theta.data()), max_entry(e.std_error.C_theta_star.data()));
        result.theta_std_error = e.std_error;
        return e.mean;
    };

    ThetaKernels y = result.state.theta;
    auto& dist = result.report.distance;
    for (int it = 0; it < options.max_iters; ++it) {
        const XiKernels xi = xi_map(y);
        const ThetaKernels ty = theta_map(xi);
        const double d = theta_distance(y, ty);
        double tol = options.tol;
        if (tol == 0.0) tol = options.mode == SolveMode::Analytic ? 1e-4 : std::max(mc_tol, 1e-10);
        result.report.tol = tol;

        y = damped(y, ty, omega);
        dist.push_back(d);
        result.report.wall_time.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        if (!std::isfinite(d)) throw NonConvergence("fixed-point iteration produced non-finite kernels");
        if (d <= tol) {
            result.report.converged = true;
            break;
        }
        const std::size_t n = dist.size();
        if (n >= 6 && dist[n - 1] > 10.0 * dist[n - 6]) {
            std::string trace;
            for (double v : dist) trace += " " + format_double(v);
            throw NonConvergence("fixed-point iteration diverges; distances:" + trace);
        }
        if (options.auto_damping && omega > 0.5 && n >= 3 && dist[n - 1] > dist[n - 2] && dist[n - 2] > dist[n - 3])
            omega = 0.5;
    }
    result.report.damping = omega;
    result.state.theta = y;
    result.state.xi = xi_map(y);
    return result;
}

ObservableTable predict_observables(const DMFTState& state, const ModelSpec& spec, const PredictOptions& options) {
    const TimeGrid& grid = state.grid();
    const std::size_t P = grid.points();
    const int k = spec.k, ks = spec.k_star;
    ObservableTable out;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < ks; ++j)
            for (std::size_t t = 0; t < P; ++t)
                out.push_back({grid.time(t), "overlap", i, j, state.theta.C_theta_star(t, i, j), 0.0, 0});
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (std::size_t t = 0; t < P; ++t)
                out.push_back({grid.time(t), "self_overlap", i, j, state.theta.C_theta(t, t, i, j), 0.0, 0});
    if (options.n_samples == 0) return out;

    const XiSampler sampler(state.theta, spec);
    const std::size_t nth = options.thresholds.size();
    const std::uint64_t seed = derive_seed(options.seed, "predict");
    struct Acc {
        std::vector<double> sum, sq;
    };
    const std::size_t width = P * (1 + nth);
    auto make = [&] { return Acc{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)}; };
    auto process = [&](Acc& acc, std::size_t begin, std::size_t end) {
        auto w = sampler.make_work(false);
        const Eigen::Map<const Eigen::VectorXd> wstar(w.wpath.data() + P * k, ks);
        for (std::size_t m = begin; m < end; ++m) {
            sampler.run(derive_seed(seed, m), w, false);
            const double y = label_value(spec, wstar, w.eps);
            for (std::size_t t = 0; t < P; ++t) {
                const Eigen::Map<const Eigen::VectorXd> xi(w.xi.data() + t * k, k);
                const double loss = loss_value(spec, activation_value(spec, xi), y);
                acc.sum[t] += loss;
                acc.sq[t] += loss * loss;
                const double norm = xi.norm();
                for (std::size_t j = 0; j < nth; ++j) {
                    const double ind = norm <= options.thresholds[j] ? 1.0 : 0.0;
                    acc.sum[P * (1 + j) + t] += ind;
                    acc.sq[P * (1 + j) + t] += ind;
                }
            }
        }
    };
    auto merge = [](Acc& a, const Acc& b) {
        for (std::size_t i = 0; i < a.sum.size(); ++i) {
            a.sum[i] += b.sum[i];
            a.sq[i] += b.sq[i];
        }
    };
    const Acc acc = chunked_reduce<Acc>(options.n_samples, 256, resolve_threads(options.threads), make, process, merge);
    const double n = static_cast<double>(options.n_samples);
    auto row = [&](const std::string& name, int r, std::size_t idx, std::size_t t) {
        const double m = acc.sum[idx] / n;
        const double var = n > 1 ? std::max(0.0, (acc.sq[idx] - n * m * m) / (n - 1.0)) : 0.0;
        out.push_back({grid.time(t), name, r, 0, m, std::sqrt(var / n), options.n_samples});
    };
    for (std::size_t t = 0; t < P; ++t) row("train_loss", 0, t, t);
    for (std::size_t j = 0; j < nth; ++j)
        for (std::size_t t = 0; t < P; ++t) row("xi_cdf", static_cast<int>(j), P * (1 + j) + t, t);
    return out;
}

}  // namespace dmft_sgd
