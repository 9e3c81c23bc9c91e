#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pclbench::cli {

/// Effective configuration of one run; defaults are the desk-scale
/// benchmark settings.
struct RunConfig {
    std::string subcommand;  // helmholtz | poisson-nn | poisson-1d | conditioning | selftest
    std::string method = "pcl";
    // helmholtz
    std::string domain = "square";
    int refinement = 3;
    double k = 0.5;
    // poisson-nn / poisson-1d
    int set_id = 1;
    int layers = 1;
    int grid_n = 31;
    double source_scale = 0.0;  // <= 0: calibrate
    int n_intervals = 31;
    std::uint64_t seed = 1;
    // pm only
    std::optional<double> lambda;
    // optimizer overrides
    int max_iters = 0;  // 0: per-benchmark default
    int memory = 10;
    // conditioning sweep
    int cond_n = 10;
    double lambda_exp_min = 2.0;
    double lambda_exp_max = 10.0;
    int lambda_steps = 9;
    // outputs
    std::string out_path;      // trace or sweep CSV
    std::string summary_path;  // JSON summary
};

struct ParsedArgs {
    RunConfig config;
    std::string sweep_file;  // when set, run every entry of the sweep file
    int jobs = 1;
};

/// Thrown by parse_args for --help; carries the help text (exit code 0).
struct HelpRequested {
    std::string text;
};

/// Parses argv; a --config JSON file fills every option not given as a
/// flag. Throws std::invalid_argument on bad input (exit code 1).
ParsedArgs parse_args(const std::vector<std::string>& argv);

/// Executes one run: 0 on success, 2 on solver failure (I/O and
/// configuration problems throw std::invalid_argument before any run).
int run(const RunConfig& config);

/// Fans a sweep file out across worker threads; returns the worst exit code.
int run_sweep(const std::string& sweep_file, int jobs);

/// Entry point used by the binary.
int main_entry(const std::vector<std::string>& argv);

}  // namespace pclbench::cli
