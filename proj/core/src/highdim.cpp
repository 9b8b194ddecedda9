#include "dmft_sgd/highdim.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/parallel.hpp"
#include "dmft_sgd/random.hpp"

namespace dmft_sgd {

std::string to_string(DataDist d) { return d == DataDist::Gaussian ? "gaussian" : "rademacher"; }

DataDist data_dist_from_string(const std::string& s) {
    if (s == "gaussian") return DataDist::Gaussian;
    if (s == "rademacher") return DataDist::Rademacher;
    throw InvalidInput("unknown data distribution '" + s + "' (expected gaussian|rademacher)");
}

std::string to_string(Engine e) {
    switch (e) {
        case Engine::Sgd: return "sgd";
        case Engine::Sme: return "sme";
        case Engine::GradientFlow: return "gf";
        case Engine::OnePass: return "onepass";
    }
    return "?";
}

Engine engine_from_string(const std::string& s) {
    if (s == "sgd") return Engine::Sgd;
    if (s == "sme") return Engine::Sme;
    if (s == "gf") return Engine::GradientFlow;
    if (s == "onepass") return Engine::OnePass;
    throw InvalidInput("unknown engine '" + s + "' (expected sgd|sme|gf|onepass)");
}

std::size_t SimConfig::batch_size(const ModelSpec& spec) const {
    if (kappa > 0) return kappa;
    const double v = std::round(spec.kappa_bar * std::pow(static_cast<double>(n), alpha));
    return static_cast<std::size_t>(std::max(1.0, v));
}

void SimConfig::validate(const ModelSpec& spec) const {
    if (n < 1 || d < 1) throw InvalidInput("n and d must be >= 1");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in [0, 1)");
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    const std::size_t b = batch_size(spec);
    if (b > n) throw InvalidInput("batch size kappa = " + std::to_string(b) + " exceeds n = " + std::to_string(n));
    if (gf_step < 0.0) throw InvalidInput("gf_step must be >= 0");
    if (!(gf_continuation >= 0.0)) throw InvalidInput("gf_continuation must be >= 0");
    if (grid.N < 1 || !(grid.delta > 0.0)) throw InvalidInput("time grid is not initialized");
    for (double c : thresholds)
        if (!std::isfinite(c)) throw InvalidInput("thresholds must be finite");
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void guard(const Eigen::MatrixXd& theta, std::size_t step, const char* engine) {
    const double s = theta.squaredNorm() / static_cast<double>(theta.rows());
    if (!std::isfinite(s) || s > 1e6) throw DivergenceError(std::string(engine) + " iterate diverged", step);
}

// F(i, :) = f(xi_i, w*_i, eps_i)
void eval_rows(const ModelSpec& spec, const RowMat& Xi, const RowMat& Ws, const Eigen::VectorXd& eps, RowMat& F) {
    F.resize(Xi.rows(), Xi.cols());
    for (Eigen::Index i = 0; i < Xi.rows(); ++i)
        eval_f_raw(spec, Xi.row(i).data(), Ws.row(i).data(), eps(i), F.row(i).data(), nullptr, nullptr);
}

TrialObservables empty_obs(std::size_t points) {
    TrialObservables o;
    o.overlap.reserve(points);
    o.self_overlap.reserve(points);
    return o;
}

void fill_gaussian(Rng& rng, double sd, double* out, std::size_t count) {
    std::normal_distribution<double> normal(0.0, sd);
    for (std::size_t i = 0; i < count; ++i) out[i] = normal(rng);
}

void fill_rademacher(Rng& rng, double scale, double* out, std::size_t count) {
    // 64 signs per draw
    std::size_t i = 0;
    while (i < count) {
        std::uint64_t bits = rng();
        for (int b = 0; b < 64 && i < count; ++b, ++i, bits >>= 1) out[i] = (bits & 1u) ? scale : -scale;
    }
}

void fill_data(DataDist dist, Rng& rng, std::size_t d, double* out, std::size_t count) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    if (dist == DataDist::Gaussian)
        fill_gaussian(rng, scale, out, count);
    else
        fill_rademacher(rng, scale, out, count);
}

void sample_init(const ModelSpec& spec, std::size_t d, Rng& rng, Eigen::MatrixXd& theta0, Eigen::MatrixXd& theta_star) {
    const Eigen::MatrixXd factor = psd_sqrt(spec.init.covariance);
    theta0.resize(static_cast<Eigen::Index>(d), spec.k);
    theta_star.resize(static_cast<Eigen::Index>(d), spec.k_star);
    Eigen::VectorXd a(spec.k), b(spec.k_star);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
        sample_init_row(factor, rng, a, b);
        theta0.row(i) = a.transpose();
        theta_star.row(i) = b.transpose();
    }
}

// Grid point index -> iterate index on a scale of `per_unit` iterates per time unit.
std::vector<std::size_t> record_steps(const TimeGrid& grid, double per_unit, std::size_t total) {
    std::vector<std::size_t> out(grid.points());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::min(total, static_cast<std::size_t>(std::floor(grid.time(i) * per_unit + 1e-9)));
    return out;
}

// Appends all but the first (duplicate) point of a continuation run.
void append_tail(TrialObservables& head, const TrialObservables& tail) {
    head.overlap.insert(head.overlap.end(), tail.overlap.begin() + 1, tail.overlap.end());
    head.self_overlap.insert(head.self_overlap.end(), tail.self_overlap.begin() + 1, tail.self_overlap.end());
    head.train_loss.insert(head.train_loss.end(), tail.train_loss.begin() + 1, tail.train_loss.end());
    head.xi_cdf.insert(head.xi_cdf.end(), tail.xi_cdf.begin() + 1, tail.xi_cdf.end());
}

}  // namespace

Dataset generate_dataset(const SimConfig& config, const ModelSpec& spec, std::uint64_t seed) {
    if (config.n < 1 || config.d < 1) throw InvalidInput("n and d must be >= 1");
    Rng rng = make_rng(seed);
    Dataset ds;
    const auto n = static_cast<Eigen::Index>(config.n);
    ds.X.resize(n, static_cast<Eigen::Index>(config.d));
    fill_data(config.data_dist, rng, config.d, ds.X.data(), static_cast<std::size_t>(ds.X.size()));
    sample_init(spec, config.d, rng, ds.theta0, ds.theta_star);
    ds.eps.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ds.eps(i) = sample_noise(spec, rng);
    const RowMat W = ds.X * ds.theta_star;
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ds.y(i) = label_value(spec, W.row(i).transpose(), ds.eps(i));
    return ds;
}

void record_observables(const Dataset& data, const Eigen::MatrixXd& theta, const ModelSpec& spec,
                        const std::vector<double>& thresholds, bool with_data, TrialObservables& out) {
    const double d = static_cast<double>(theta.rows());
    out.overlap.push_back(theta.transpose() * data.theta_star / d);
    out.self_overlap.push_back(theta.transpose() * theta / d);
    if (!with_data) return;
    const RowMat Xi = data.X * theta;
    const Eigen::Index n = Xi.rows();
    double loss = 0.0;
    std::vector<double> cdf(thresholds.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        loss += loss_value(spec, activation_value(spec, Xi.row(i).transpose()), data.y(i));
        const double norm = Xi.row(i).norm();
        for (std::size_t j = 0; j < thresholds.size(); ++j)
            if (norm <= thresholds[j]) cdf[j] += 1.0;
    }
    for (double& c : cdf) c /= static_cast<double>(n);
    out.train_loss.push_back(loss / static_cast<double>(n));
    out.xi_cdf.push_back(std::move(cdf));
}

TrialObservables run_sgd(const Dataset& data, const SimConfig& config, const ModelSpec& spec, std::uint64_t seed,
                         Eigen::MatrixXd* theta_out) {
    const std::size_t n = static_cast<std::size_t>(data.X.rows());
    const std::size_t kappa = config.batch_size(spec);
    if (kappa > n) throw InvalidInput("batch size exceeds n");
    const double n_alpha = std::pow(static_cast<double>(n), config.alpha);
    const double per_epoch = static_cast<double>(n) / n_alpha;  // n^{1 - alpha}
    const auto total = static_cast<std::size_t>(std::ceil(config.grid.T * per_epoch - 1e-9));
    const auto when = record_steps(config.grid, per_epoch, total);
    const double lambda = spec.regularizer.lambda;

    Rng rng = make_rng(seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const RowMat Ws = data.X * data.theta_star;
    Eigen::MatrixXd theta = data.theta0;
    RowMat Fb(static_cast<Eigen::Index>(kappa), spec.k);
    Eigen::RowVectorXd xi(spec.k);

    TrialObservables obs = empty_obs(when.size());
    std::size_t next = 0;
    for (std::size_t j = 0;; ++j) {
        while (next < when.size() && when[next] == j) {
            record_observables(data, theta, spec, config.thresholds, true, obs);
            ++next;
        }
        if (j == total) break;
        const double eta = n_alpha * spec.eta(static_cast<double>(j) / per_epoch);
        // partial Fisher-Yates: perm[0..kappa) becomes a uniform kappa-subset
        for (std::size_t b = 0; b < kappa; ++b) {
            std::uniform_int_distribution<std::size_t> pick(b, n - 1);
            std::swap(perm[b], perm[pick(rng)]);
        }
        for (std::size_t b = 0; b < kappa; ++b) {
            const auto i = static_cast<Eigen::Index>(perm[b]);
            xi.noalias() = data.X.row(i) * theta;
            eval_f_raw(spec, xi.data(), Ws.row(i).data(), data.eps(i), Fb.row(static_cast<Eigen::Index>(b)).data(),
                       nullptr, nullptr);
        }
        if (lambda != 0.0) theta *= 1.0 - eta * lambda / static_cast<double>(n);
        const double c = eta / static_cast<double>(kappa);
        for (std::size_t b = 0; b < kappa; ++b) {
            const auto i = static_cast<Eigen::Index>(perm[b]);
            theta.noalias() -= c * data.X.row(i).transpose() * Fb.row(static_cast<Eigen::Index>(b));
        }
        guard(theta, j + 1, "SGD");
    }
    if (theta_out) *theta_out = theta;
    return obs;
}

TrialObservables run_sme(const Dataset& data, const SimConfig& config, const ModelSpec& spec, std::uint64_t seed,
                         Eigen::MatrixXd* theta_out) {
    const TimeGrid& g = config.grid;
    const double kb = spec.kappa_bar;
    const double lambda = spec.regularizer.lambda;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(g.delta * kb, std::sqrt(g.delta * kb));
    const RowMat Ws = data.X * data.theta_star;
    Eigen::MatrixXd theta = data.theta0;
    RowMat Xi, F;
    TrialObservables obs = empty_obs(g.points());
    record_observables(data, theta, spec, config.thresholds, true, obs);
    for (std::size_t r = 0; r < g.N; ++r) {
        const double eta = spec.eta(g.time(r));
        Xi.noalias() = data.X * theta;
        eval_rows(spec, Xi, Ws, data.eps, F);
        for (Eigen::Index i = 0; i < F.rows(); ++i) F.row(i) *= normal(rng);
        const Eigen::MatrixXd step = data.X.transpose() * F;
        theta = (1.0 - g.delta * eta * lambda) * theta - (eta / kb) * step;
        guard(theta, r + 1, "SME");
        record_observables(data, theta, spec, config.thresholds, true, obs);
    }
    if (theta_out) *theta_out = theta;
    return obs;
}

namespace {

void flow_step(const Dataset& data, const RowMat& Ws, const ModelSpec& spec, double h, Eigen::MatrixXd& theta,
               RowMat& Xi, RowMat& F) {
    Xi.noalias() = data.X * theta;
    eval_rows(spec, Xi, Ws, data.eps, F);
    const Eigen::MatrixXd grad = data.X.transpose() * F + spec.regularizer.lambda * theta;
    theta -= h * grad;
}

}  // namespace

TrialObservables run_gradient_flow(const Dataset& data, const SimConfig& config, const ModelSpec& spec,
                                   Eigen::MatrixXd* theta_out, const Eigen::MatrixXd* theta_init) {
    const TimeGrid& g = config.grid;
    std::size_t sub = 4;
    if (config.gf_step > 0.0) {
        const double ratio = g.delta / config.gf_step;
        sub = static_cast<std::size_t>(std::llround(ratio));
        if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-9 * ratio)
            throw InvalidInput("gf_step must divide the grid step");
    }
    const double h = g.delta / static_cast<double>(sub);
    const RowMat Ws = data.X * data.theta_star;
    Eigen::MatrixXd theta = theta_init ? *theta_init : data.theta0;
    RowMat Xi, F;
    TrialObservables obs = empty_obs(g.points());
    record_observables(data, theta, spec, config.thresholds, true, obs);
    for (std::size_t r = 0; r < g.N; ++r) {
        for (std::size_t q = 0; q < sub; ++q) {
            flow_step(data, Ws, spec, h, theta, Xi, F);
            guard(theta, r * sub + q + 1, "gradient flow");
        }
        record_observables(data, theta, spec, config.thresholds, true, obs);
    }
    if (theta_out) *theta_out = theta;
    return obs;
}

FlowResult gradient_flow_until_converged(const Dataset& data, const Eigen::MatrixXd& theta, const ModelSpec& spec,
                                         double step, double tol, std::size_t max_steps) {
    if (!(step > 0.0) || !(tol > 0.0)) throw InvalidInput("step and tol must be positive");
    const RowMat Ws = data.X * data.theta_star;
    const double sqrt_d = std::sqrt(static_cast<double>(theta.rows()));
    FlowResult res{theta, 0, false};
    RowMat Xi, F;
    Eigen::MatrixXd prev;
    while (res.steps < max_steps) {
        prev = res.theta;
        flow_step(data, Ws, spec, step, res.theta, Xi, F);
        ++res.steps;
        guard(res.theta, res.steps, "gradient flow");
        if ((res.theta - prev).norm() / sqrt_d < tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

TrialObservables run_one_pass_sgd(const SimConfig& config, const ModelSpec& spec, std::uint64_t seed) {
    const std::size_t d = config.d;
    const double dd = static_cast<double>(d);
    const TimeGrid& g = config.grid;
    const auto total = static_cast<std::size_t>(std::ceil(g.T * dd - 1e-9));
    const auto when = record_steps(g, dd, total);
    const double lambda = spec.regularizer.lambda;

    Rng rng = make_rng(seed);
    Dataset frame;  // holds theta* for the overlap recorder; no samples
    sample_init(spec, d, rng, frame.theta0, frame.theta_star);
    Eigen::MatrixXd theta = frame.theta0;
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    Eigen::RowVectorXd xi(spec.k), ws(spec.k_star), f(spec.k);

    TrialObservables obs = empty_obs(when.size());
    std::size_t next = 0;
    for (std::size_t j = 0;; ++j) {
        while (next < when.size() && when[next] == j) {
            record_observables(frame, theta, spec, config.thresholds, false, obs);
            ++next;
        }
        if (j == total) break;
        fill_data(config.data_dist, rng, d, x.data(), d);
        const double eps = sample_noise(spec, rng);
        xi.noalias() = x.transpose() * theta;
        ws.noalias() = x.transpose() * frame.theta_star;
        eval_f_raw(spec, xi.data(), ws.data(), eps, f.data(), nullptr, nullptr);
        const double eta = spec.eta(static_cast<double>(j) / dd);
        if (lambda != 0.0) theta *= 1.0 - eta * lambda / dd;
        theta.noalias() -= eta * x * f;
        guard(theta, j + 1, "one-pass SGD");
    }
    return obs;
}

ObservableTrace simulate(Engine engine, const SimConfig& config, const ModelSpec& spec) {
    spec.validate();
    config.validate(spec);
    ObservableTrace trace;
    trace.thresholds = config.thresholds;
    for (std::size_t i = 0; i < config.grid.points(); ++i) trace.times.push_back(config.grid.time(i));
    trace.trials.resize(config.trials);

    // continuation grid: same step as the main grid where it divides the horizon
    std::optional<TimeGrid> cont;
    if (config.gf_continuation > 0.0 && (engine == Engine::Sgd || engine == Engine::Sme)) {
        const double steps = std::max(1.0, std::round(config.gf_continuation / config.grid.delta));
        cont = TimeGrid::make(config.gf_continuation, config.gf_continuation / steps);
        for (std::size_t i = 1; i < cont->points(); ++i) trace.times.push_back(config.grid.T + cont->time(i));
    }

    Dataset shared;
    const bool needs_data = engine != Engine::OnePass;
    if (needs_data && config.share_dataset) shared = generate_dataset(config, spec, derive_seed(config.seed, "data"));

    parallel_for(config.trials, resolve_threads(config.threads), [&](std::size_t m) {
        const std::uint64_t trial_seed = derive_seed(config.seed, m);
        const std::uint64_t dyn_seed = derive_seed(trial_seed, "dynamics");
        if (engine == Engine::OnePass) {
            trace.trials[m] = run_one_pass_sgd(config, spec, dyn_seed);
            return;
        }
        Dataset own;
        if (!config.share_dataset) own = generate_dataset(config, spec, derive_seed(trial_seed, "data"));
        const Dataset& data = config.share_dataset ? shared : own;
        Eigen::MatrixXd last;
        switch (engine) {
            case Engine::Sgd: trace.trials[m] = run_sgd(data, config, spec, dyn_seed, &last); break;
            case Engine::Sme: trace.trials[m] = run_sme(data, config, spec, dyn_seed, &last); break;
            case Engine::GradientFlow: trace.trials[m] = run_gradient_flow(data, config, spec); break;
            case Engine::OnePass: break;
        }
        if (cont && engine != Engine::GradientFlow) {
            SimConfig gf = config;
            gf.grid = *cont;
            const TrialObservables tail = run_gradient_flow(data, gf, spec, nullptr, &last);
            append_tail(trace.trials[m], tail);
        }
    });
    return trace;
}

}  // namespace dmft_sgd
