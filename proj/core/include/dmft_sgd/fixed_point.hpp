#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmft_sgd/dmft_state.hpp"
#include "dmft_sgd/estimators.hpp"
#include "dmft_sgd/model.hpp"
#include "dmft_sgd/observables.hpp"

namespace dmft_sgd {

/// Analytic: closed-form maps on both sides (squared loss, linear activation, k = 1).
/// Hybrid: closed-form ridge theta-map, Monte Carlo xi-map.
/// MonteCarlo: both maps by Monte Carlo.
enum class SolveMode { Analytic, MonteCarlo, Hybrid };

std::string to_string(SolveMode m);
SolveMode solve_mode_from_string(const std::string& s);

struct SolveOptions {
    int max_iters = 50;
    /// Sup-norm tolerance on the (C_theta, R_theta) change. 0 selects the
    /// default: 1e-4 in Analytic mode, 3 x the largest Monte Carlo standard
    /// error of the estimate feeding C_theta otherwise.
    double tol = 0.0;
    double damping = 1.0;
    /// Switch to damping 0.5 after two consecutive distance increases.
    bool auto_damping = true;
    std::size_t mc_samples = 10000;
    SolveMode mode = SolveMode::Analytic;
    std::uint64_t seed = 0;
    int threads = 0;
    RfShrinkage shrinkage;
};

struct ConvergenceReport {
    std::vector<double> distance;   // per iteration
    std::vector<double> wall_time;  // seconds since the start of solve
    bool converged = false;
    double tol = 0.0;
    double damping = 1.0;           // damping in effect at the end

    std::size_t iterations() const { return distance.size(); }
    void write_csv(const std::string& path) const;
};

struct SolveResult {
    DMFTState state;
    ConvergenceReport report;
    /// Standard errors of the last Monte Carlo estimates (absent in Analytic mode
    /// or for the analytic half of Hybrid mode).
    std::optional<XiKernels> xi_std_error;
    std::optional<ThetaKernels> theta_std_error;
};

/// Iterates Y <- (1 - w) Y + w T(Y) on Y = (C_theta, R_theta) starting from the
/// eta = 0 free state. Monte Carlo maps reuse fixed seed streams every
/// iteration, so T is a deterministic map within one solve. Throws
/// UnsupportedModel for incompatible modes and NonConvergence when the
/// distance grows tenfold over five iterations.
SolveResult solve(const ModelSpec& spec, const TimeGrid& grid, const SolveOptions& options);

/// Max over all kernels (star blocks included) of the entrywise sup difference.
double kernel_distance(const DMFTState& a, const DMFTState& b);
double theta_distance(const ThetaKernels& a, const ThetaKernels& b);

struct PredictOptions {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    std::vector<double> thresholds{1.0};
    int threads = 0;
};

/// Predicted observable curves: overlap and self-overlap read from C_theta
/// (standard error 0, n_trials 0), train loss and P(|xi^t| <= c) by Monte
/// Carlo over the xi-process (n_trials = number of samples).
ObservableTable predict_observables(const DMFTState& state, const ModelSpec& spec, const PredictOptions& options);

}  // namespace dmft_sgd
