#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/model.hpp"
#include "dmft_sgd/observables.hpp"
#include "dmft_sgd/time_grid.hpp"

namespace dmft_sgd {

enum class DataDist { Gaussian, Rademacher };

std::string to_string(DataDist d);
DataDist data_dist_from_string(const std::string& s);

/// Finite-(n, d) dynamics.
enum class Engine { Sgd, Sme, GradientFlow, OnePass };

std::string to_string(Engine e);
Engine engine_from_string(const std::string& s);

struct SimConfig {
    std::size_t n = 2000;
    std::size_t d = 2500;
    double alpha = 0.0;
    /// Batch size; 0 picks max(1, round(kappa_bar n^alpha)).
    std::size_t kappa = 0;
    TimeGrid grid = TimeGrid::make(4.0, 0.05);
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    DataDist data_dist = DataDist::Gaussian;
    std::vector<double> thresholds{1.0};
    int threads = 0;
    /// Gradient-flow Euler step; 0 means grid.delta / 4.
    double gf_step = 0.0;
    /// Reuse one dataset for all trials instead of drawing one per trial.
    bool share_dataset = false;
    /// After SGD/SME, continue with gradient flow from the last iterate over
    /// this much rescaled time (0 disables). The continuation is appended to
    /// the trace at times T + tau.
    double gf_continuation = 0.0;

    /// Throws InvalidInput on violated invariants (kappa <= n, alpha in [0, 1), ...).
    void validate(const ModelSpec& spec) const;
    std::size_t batch_size(const ModelSpec& spec) const;
};

using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
    DataMatrix X;                // n x d, entries of variance 1/d
    Eigen::MatrixXd theta_star;  // d x k*
    Eigen::MatrixXd theta0;      // d x k
    Eigen::VectorXd eps;         // n
    Eigen::VectorXd y;           // n
};

Dataset generate_dataset(const SimConfig& config, const ModelSpec& spec, std::uint64_t seed);

/// Observables of the iterate theta on a dataset; train loss and xi-CDF only
/// when `with_data` is set.
void record_observables(const Dataset& data, const Eigen::MatrixXd& theta, const ModelSpec& spec,
                        const std::vector<double>& thresholds, bool with_data, TrialObservables& out);

/// Multi-pass minibatch SGD on the epoch scale: ceil(T n^{1-alpha}) updates with
/// learning rate n^alpha eta_bar(j n^{alpha-1}); iterate j is reported at time
/// j n^{alpha-1}, i.e. grid time t reads iterate floor(t n^{1-alpha}).
TrialObservables run_sgd(const Dataset& data, const SimConfig& config, const ModelSpec& spec, std::uint64_t seed,
                         Eigen::MatrixXd* theta_out = nullptr);

/// Discrete SME: one Euler-Maruyama step per grid interval with Gaussian
/// multipliers z ~ N(delta kappa_bar, delta kappa_bar) per sample.
TrialObservables run_sme(const Dataset& data, const SimConfig& config, const ModelSpec& spec, std::uint64_t seed,
                         Eigen::MatrixXd* theta_out = nullptr);

/// Explicit Euler on d theta / d tau = -(X^T f + g(theta)); the grid is read as
/// a tau grid.
TrialObservables run_gradient_flow(const Dataset& data, const SimConfig& config, const ModelSpec& spec,
                                   Eigen::MatrixXd* theta_out = nullptr, const Eigen::MatrixXd* theta_init = nullptr);

struct FlowResult {
    Eigen::MatrixXd theta;
    std::size_t steps = 0;
    bool converged = false;
};

/// Gradient flow from `theta` until |theta_{j+1} - theta_j| / sqrt(d) < tol or
/// max_steps is reached.
FlowResult gradient_flow_until_converged(const Dataset& data, const Eigen::MatrixXd& theta, const ModelSpec& spec,
                                         double step, double tol = 1e-6, std::size_t max_steps = 1000000);

/// One-pass SGD with a fresh sample per step: ceil(tau_max d) steps, step j
/// reported at tau = j / d. The grid is read as a tau grid; eta_bar(tau) and
/// lambda come from the spec. No dataset, so only overlaps are recorded.
TrialObservables run_one_pass_sgd(const SimConfig& config, const ModelSpec& spec, std::uint64_t seed);

/// Runs `config.trials` independent repetitions of an engine in parallel.
/// Trial m uses the derived seed (seed, m) for its data and its dynamics, so
/// SGD and SME runs with the same config see the same datasets.
ObservableTrace simulate(Engine engine, const SimConfig& config, const ModelSpec& spec);

}  // namespace dmft_sgd
