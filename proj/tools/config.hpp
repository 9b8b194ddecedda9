#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/fixed_point.hpp"
#include "dmft_sgd/highdim.hpp"
#include "dmft_sgd/model.hpp"

namespace dmft_sgd::cli {

/// Parse or validation failure in an experiment file; the message carries
/// "<file>:<line>:<col>: " when the offending node is known.
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

inline constexpr int kConfigVersion = 1;

struct ModelSection {
    int k = 1;
    int k_star = 1;
    std::optional<double> gamma;
    double kappa_bar = 1.0;
    EtaSchedule eta = EtaSchedule::constant(1.0);
    Driver driver = Driver::Poisson;
    Loss loss;
    Activation activation = Activation::Linear;
    TeacherKind teacher = TeacherKind::Identity;
    /// Multi-pass ridge strength. Exactly one of lambda / lambda_onepass is set;
    /// lambda_onepass fixes the one-pass strength and implies lambda = gamma * lambda_onepass.
    std::optional<double> lambda;
    std::optional<double> lambda_onepass;
    std::optional<Eigen::MatrixXd> init_covariance;
    double noise_variance = 0.0;

    bool operator==(const ModelSection& o) const;
};

struct SimSection {
    std::size_t n = 2000;
    std::size_t d = 2500;
    double alpha = 0.0;
    std::size_t kappa = 0;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    DataDist data_dist = DataDist::Gaussian;
    std::vector<double> thresholds{1.0};
    double gf_step = 0.0;
    double gf_continuation = 0.0;
    bool share_dataset = false;

    bool operator==(const SimSection&) const = default;
};

struct DmftSection {
    double T = 4.0;
    double delta = 0.05;
    SolveMode mode = SolveMode::Analytic;
    int max_iters = 50;
    double tol = 0.0;
    double damping = 1.0;
    bool auto_damping = true;
    std::size_t mc_samples = 10000;
    std::size_t predict_samples = 10000;
    std::uint64_t seed = 0;
    bool shrinkage = false;
    double shrinkage_window = 0.0;  // in time units
    double shrinkage_factor = 1.0;
    /// Solve once per listed driver (outputs suffixed _<driver>); empty means
    /// the model's driver only, with unsuffixed outputs.
    std::vector<Driver> drivers;

    bool operator==(const DmftSection&) const = default;
};

struct DeskScale {
    std::size_t n = 2000;
    std::size_t d = 2500;
    std::optional<std::size_t> trials;

    bool operator==(const DeskScale&) const = default;
};

struct Sweep {
    std::string parameter;  // "eta" or "gamma"
    std::vector<double> values;

    bool operator==(const Sweep&) const = default;
};

struct RunSection {
    std::vector<std::string> engines{"dmft"};
    std::string output_dir = "out";
    bool plot_data = false;
    int threads = 0;
    std::string scale = "desk";  // "desk" applies desk_scale, "paper" ignores it
    std::optional<Sweep> sweep;

    bool operator==(const RunSection&) const = default;
};

struct Experiment {
    std::string source;  // file name, for messages only
    ModelSection model;
    std::optional<SimSection> sim;
    std::optional<DmftSection> dmft;
    RunSection run;
    std::optional<DeskScale> desk_scale;

    /// Equality of everything except `source`.
    bool same_experiment(const Experiment& o) const;
};

/// One concrete run after scale and sweep resolution.
struct Variant {
    std::string label;  // "" without a sweep, else e.g. "eta=0.5"
    ModelSpec spec;
    std::optional<SimConfig> sim;
    TimeGrid grid;
};

Experiment parse_experiment_file(const std::string& path);
Experiment parse_experiment(const std::string& text, const std::string& source = "<string>");

/// Fully resolved YAML echo; parses back to an equal experiment.
std::string to_yaml(const Experiment& e);

/// Applies desk scaling and the sweep. Throws ConfigError on inconsistent input
/// (gamma disagreeing with n/d, bad sweep parameter, ...).
std::vector<Variant> resolve(const Experiment& e);

}  // namespace dmft_sgd::cli
