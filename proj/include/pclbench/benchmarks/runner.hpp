#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pclbench/optimize.hpp"

namespace pclbench::bench {

/// Per-iteration optimization record of a benchmark run. Row 0 holds the
/// initial point; the wall time lives only in the JSON summary so trace
/// files stay byte-reproducible.
struct BenchmarkTrace {
    std::vector<opt::TraceRecord> records;
    std::string stop_reason;
    double final_loss = 0.0;
    double final_error = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
    std::vector<double> final_theta;
};

/// CSV with header iteration,loss,error,grad_norm.
void write_trace_csv(const BenchmarkTrace& trace, std::ostream& out);

struct HelmholtzRunConfig {
    std::string method = "pcl";  // pcl | pm
    std::string domain = "square";
    int refinement = 3;
    double k = 0.5;
    double lambda = 1.0;  // pm only
    int max_iters = 0;    // 0: per-method default (100 pcl, 15000 pm)
    int memory = 10;
};
BenchmarkTrace run_helmholtz(const HelmholtzRunConfig& config);

struct PoissonNNRunConfig {
    std::string method = "pcl";
    int set_id = 1;
    int hidden_layers = 1;
    double lambda = 100.0;  // pm only
    std::uint64_t seed = 1;
    int grid_n = 31;
    int max_iters = 5000;
    int memory = 10;
    double source_scale = 0.0;  // <= 0: calibrate at run time
};
BenchmarkTrace run_poisson_nn(const PoissonNNRunConfig& config);

struct Poisson1DRunConfig {
    std::string method = "pcl";
    int n = 31;
    int hidden_layers = 1;
    double lambda = 1.0;  // pm only
    std::uint64_t seed = 1;
    int max_iters = 5000;
    int memory = 10;
};
BenchmarkTrace run_poisson1d(const Poisson1DRunConfig& config);

/// Quick FD-gradient and Jacobian-oracle checks; prints one line per check.
bool selftest(std::ostream& log);

}  // namespace pclbench::bench
