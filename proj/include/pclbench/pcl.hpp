#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pclbench/sparse.hpp"

namespace pclbench::pcl {

/// Discretized constraint F(theta, u) = 0 with its u-Jacobian and the
/// reverse-mode pullback of w^T F with respect to theta (w held constant).
struct ConstraintSystem {
    std::function<std::vector<double>(std::span<const double> theta, std::span<const double> u)>
        residual;
    std::function<sp::SparseMatrix(std::span<const double> theta, std::span<const double> u)>
        jacobian_u;
    std::function<std::vector<double>(std::span<const double> theta, std::span<const double> u,
                                      std::span<const double> w)>
        theta_pullback;
    int dim_u = 0;
    int dim_theta = 0;
};

struct Loss {
    std::function<double(std::span<const double> u)> value;
    std::function<std::vector<double>(std::span<const double> u)> grad;
};

struct PCLProblem {
    ConstraintSystem system;
    Loss loss;
    std::vector<double> initial_u;
};

struct NewtonSettings {
    double residual_tol = 1e-10;  // absolute, on the max norm of F
    int max_iters = 50;
    double backtrack_factor = 0.5;
    int max_backtracks = 30;
};

struct NewtonResult {
    std::vector<double> u;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
};

/// Newton-Raphson on F(theta, .) with backtracking on the residual norm.
/// Reports the best iterate even when the tolerance is not met; throws
/// sp::SingularMatrixError if a Jacobian cannot be factorized.
NewtonResult newton_solve(const ConstraintSystem& system, std::span<const double> theta,
                          std::vector<double> u0, const NewtonSettings& settings = {});

/// Gradient of the reduced loss at a converged state: one transpose solve
/// for the adjoint w plus one tape pullback of w^T F.
std::vector<double> adjoint_gradient(const PCLProblem& problem, std::span<const double> theta,
                                     std::span<const double> u);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
    bool solver_failed = false;
    NewtonResult newton;
};

/// Stateful driver: solves the constraint and evaluates loss + adjoint
/// gradient. Every solve starts from the last committed outer iterate, so
/// the loss seen by a line search is a consistent function of theta; call
/// commit() when the optimizer accepts a step. A failed inner solve yields
/// +inf loss so the line search can back off.
class Driver {
public:
    Driver(PCLProblem problem, NewtonSettings newton = {});

    LossAndGrad loss_and_grad(std::span<const double> theta);
    /// Promotes the most recent successful solve to the warm-start state.
    void commit();
    const std::vector<double>& last_solution() const { return pending_u_; }
    void reset_warm_start();

private:
    PCLProblem problem_;
    NewtonSettings newton_;
    std::vector<double> committed_u_;
    std::vector<double> pending_u_;
};

}  // namespace pclbench::pcl
