#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmft_sgd::cli {

/// Overrides applied on top of the experiment file.
struct CommandOptions {
    std::optional<std::string> output_dir;
    std::optional<std::string> scale;  // "desk" | "paper"
    std::optional<int> threads;
    bool quiet = false;
};

/// Runs every engine listed in run.engines (dmft included) and writes one
/// trace CSV per engine plus the resolved config echo. Returns the files written.
std::vector<std::string> cmd_simulate(const std::string& config_path, const CommandOptions& options = {});

/// Solves the DMFT fixed point and writes the kernel container, the convergence
/// report, the predicted trace CSV and the resolved config echo.
std::vector<std::string> cmd_dmft(const std::string& config_path, const CommandOptions& options = {});

/// Compares traces against the first one: per-time differences and z-scores,
/// then one max-|z| summary row per observable component. Returns the largest |z|.
double cmd_compare(const std::vector<std::string>& paths, std::ostream& out);

inline constexpr const char* kCompareHeader =
    "file,observable_name,component_row,component_col,time,reference_mean,mean,difference,z";

/// Maps an exception from a command to the process exit code
/// (2 configuration or usage error, 3 numerical failure, 1 anything else).
int exit_code_for(const std::exception& e);

}  // namespace dmft_sgd::cli
