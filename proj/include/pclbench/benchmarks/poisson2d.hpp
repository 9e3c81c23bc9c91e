#pragma once

#include <functional>
#include <memory>

#include "pclbench/jacprop.hpp"
#include "pclbench/nn.hpp"
#include "pclbench/pcl.hpp"

namespace pclbench::bench {

/// Diagonal diffusivity pair (f1, f2) with derivatives.
struct TestFunctions {
    std::function<double(double)> f1, df1, f2, df2;
};

/// The four reference diffusivity sets (fractional powers are clamped at
/// zero from below, where the solution never goes).
TestFunctions test_function_set(int id);

/// Staggered-grid operators for -div(f(u) grad u) = h on the unit square
/// with zero boundary values: midpoint averages, midpoint differences, and
/// flux differences back to the interior nodes. Unknowns are the interior
/// nodal values, (grid_n - 2)^2 of them.
struct StaggeredGrid {
    int grid_n = 31;  // nodes per side including the boundary
    sp::SparseMatrix avg_x, avg_y;    // node -> midpoint average
    sp::SparseMatrix diff_x, diff_y;  // node -> midpoint difference / h
    sp::SparseMatrix flux_x, flux_y;  // midpoint -> node flux difference / h

    double h() const { return 1.0 / (grid_n - 1); }
    int dim_u() const { return (grid_n - 2) * (grid_n - 2); }
    int interior_index(int i, int j) const { return (j - 1) * (grid_n - 2) + (i - 1); }
    /// Physical position of interior node (i,j), 1-based inside the grid.
    double coord(int i) const { return i * h(); }
};

StaggeredGrid make_staggered_grid(int grid_n);

/// Residual of -div(f(u) grad u) - h_src at the interior nodes, with the
/// Jacobian propagated through the staggered operators.
jacprop::Field poisson2d_residual_field(const StaggeredGrid& grid, const TestFunctions& f,
                                        std::span<const double> u,
                                        std::span<const double> source);

/// 2D Poisson benchmark with the diffusivity pair approximated by a network
/// mapping u to (f1, f2).
class PoissonNNProblem {
public:
    PoissonNNProblem(int grid_n, int set_id, nn::MLP mlp, double source_scale);

    /// Bisects the source amplitude until max u of the true forward
    /// solution is close to the target (0.55 by default).
    static double calibrate_source_scale(int grid_n, int set_id, double target_max_u = 0.55);

    const StaggeredGrid& grid() const { return grid_; }
    const nn::MLP& mlp() const { return mlp_; }
    int set_id() const { return set_id_; }
    double source_scale() const { return source_scale_; }
    const std::vector<double>& source() const { return source_; }

    /// Newton solve with the true diffusivities (data generation).
    std::vector<double> forward_true() const;
    /// Newton solve with the network diffusivities.
    std::vector<double> forward_nn(std::span<const double> theta,
                                   std::span<const double> u0) const;
    /// Solution of the constant-0.1 diffusivity problem; the first Newton
    /// iterate starts here because a zero-bias network vanishes at u = 0.
    std::vector<double> constant_diffusivity_solution() const;

    pcl::ConstraintSystem nn_system() const;
    pcl::ConstraintSystem true_system() const;
    /// Least-squares data loss; a non-empty `observed` restricts it to those
    /// interior indices (default: the full grid solution).
    pcl::Loss loss(std::vector<double> u_obs, std::vector<int> observed = {}) const;
    pcl::PCLProblem pcl_problem(std::vector<double> u_obs, std::vector<int> observed = {}) const;

    /// sqrt(sum_i (f1(u_i)-f1(u_i;theta))^2 + (f2 ...)^2) over 100 points
    /// u_i = 0.6 (i-1)/99.
    double nn_error_metric(std::span<const double> theta) const;

private:
    TestFunctions nn_functions(std::span<const double> theta) const;

    StaggeredGrid grid_;
    int set_id_ = 1;
    nn::MLP mlp_;
    double source_scale_ = 0.0;
    std::vector<double> source_;  // h_src at the interior nodes
    TestFunctions true_f_;
};

}  // namespace pclbench::bench
