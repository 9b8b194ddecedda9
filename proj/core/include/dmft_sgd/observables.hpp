#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dmft_sgd {

/// Observables recorded along one run at the trace times.
struct TrialObservables {
    std::vector<Eigen::MatrixXd> overlap;       // d^-1 theta^T theta*, k x k*
    std::vector<Eigen::MatrixXd> self_overlap;  // d^-1 theta^T theta, k x k
    std::vector<double> train_loss;             // empty when not recorded
    std::vector<std::vector<double>> xi_cdf;    // [time][threshold], empty when not recorded
};

/// One row of the plot-ready table.
struct ObservableRow {
    double time = 0.0;
    std::string name;
    int row = 0;
    int col = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_trials = 0;

    bool operator==(const ObservableRow&) const = default;
};

using ObservableTable = std::vector<ObservableRow>;

/// Per-trial observables of a simulation together with their time axis.
struct ObservableTrace {
    std::vector<double> times;
    std::vector<double> thresholds;
    std::vector<TrialObservables> trials;

    /// Across-trial mean and standard error (0 for a single trial), ordered by
    /// observable, component, then time.
    ObservableTable summarize() const;
};

inline constexpr const char* kTraceHeader = "time,observable_name,component_row,component_col,mean,stderr,n_trials";

/// Writes `# seed=<seed>` (and any extra comment lines), the fixed header and
/// the rows. Doubles are printed in shortest round-trip form.
void write_table_csv(std::ostream& os, const ObservableTable& table, std::uint64_t seed,
                     const std::vector<std::string>& comments = {});
void write_table_csv(const std::string& path, const ObservableTable& table, std::uint64_t seed,
                     const std::vector<std::string>& comments = {});

/// Parses a table written by write_table_csv; comment lines are skipped.
/// Throws InvalidInput on malformed content.
ObservableTable read_table_csv(const std::string& path);
ObservableTable read_table_csv(std::istream& is, const std::string& source = "<stream>");

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Rows matching (name, row, col), in file order.
ObservableTable select(const ObservableTable& table, const std::string& name, int row = 0, int col = 0);

}  // namespace dmft_sgd
