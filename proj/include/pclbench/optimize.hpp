#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pclbench::opt {

struct LbfgsSettings {
    int memory = 10;
    double grad_tol = 1e-12;
    double rel_f_tol = 1e-12;
    int max_iters = 5000;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    double initial_step = 1.0;
    int max_line_search = 40;
};

enum class StopReason { grad_tol, rel_f_tol, max_iters, line_search_failed };

std::string to_string(StopReason r);

struct TraceRecord {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double step_len = 0.0;
    double aux_error = 0.0;
    // Line-search endpoints, kept so Wolfe conditions are checkable after the fact.
    double phi0 = 0.0;
    double dphi0 = 0.0;
    double phi_alpha = 0.0;
    double dphi_alpha = 0.0;
};

struct OptimTrace {
    std::vector<TraceRecord> records;
};

struct MinimizeResult {
    std::vector<double> z;
    double loss = 0.0;
    OptimTrace trace;
    StopReason stop_reason = StopReason::max_iters;
    int iterations = 0;
};

using Objective = std::function<double(std::span<const double> z, std::vector<double>& grad)>;

/// Curvature pair for the two-loop recursion.
struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho = 0.0;  // 1 / (s^T y)
};

/// Standard L-BFGS two-loop recursion; empty history degenerates to -g.
/// Pairs with s^T y <= 0 must not be stored (see minimize).
std::vector<double> two_loop_direction(const std::deque<CurvaturePair>& history,
                                       std::span<const double> g);

/// L-BFGS with a strong-Wolfe line search and a dual stopping criterion on
/// the gradient norm and the relative function change. A non-finite
/// objective during line search is treated as a rejected step; when a line
/// search fails the history is dropped once and the iteration retried along
/// the steepest descent direction. `on_accept` fires for every accepted
/// iterate (stateful objectives use it to commit warm starts).
MinimizeResult minimize(const Objective& f_and_g, std::vector<double> z0,
                        const LbfgsSettings& settings = {},
                        const std::function<double(std::span<const double>)>& aux_metric = {},
                        const std::function<void(std::span<const double>)>& on_accept = {});

}  // namespace pclbench::opt
