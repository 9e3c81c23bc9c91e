#include "pclbench/pcl.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pclbench::pcl {

namespace {

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

NewtonResult newton_solve(const ConstraintSystem& system, std::span<const double> theta,
                          std::vector<double> u0, const NewtonSettings& settings) {
    if (static_cast<int>(u0.size()) != system.dim_u)
        throw std::invalid_argument("newton_solve: initial guess length mismatch");

    NewtonResult res;
    res.u = std::move(u0);
    std::vector<double> f = system.residual(theta, res.u);
    double fnorm = norm_inf(f);
    res.residual_history.push_back(fnorm);

    std::vector<double> trial(res.u.size());
    for (int it = 0; it < settings.max_iters; ++it) {
        if (fnorm <= settings.residual_tol) {
            res.converged = true;
            break;
        }
        sp::SparseMatrix jac = system.jacobian_u(theta, res.u);
        sp::LUFactors lu = sp::factorize(jac);
        std::vector<double> rhs(f.size());
        for (size_t i = 0; i < f.size(); ++i) rhs[i] = -f[i];
        std::vector<double> step = sp::solve(lu, rhs);

        // Backtracking on the residual max norm.
        double alpha = 1.0;
        double trial_norm = std::numeric_limits<double>::infinity();
        std::vector<double> trial_f;
        for (int bt = 0; bt <= settings.max_backtracks; ++bt) {
            for (size_t i = 0; i < res.u.size(); ++i) trial[i] = res.u[i] + alpha * step[i];
            trial_f = system.residual(theta, trial);
            trial_norm = norm_inf(trial_f);
            if (std::isfinite(trial_norm) && trial_norm < fnorm) break;
            alpha *= settings.backtrack_factor;
        }
        if (!(std::isfinite(trial_norm) && trial_norm < fnorm)) {
            // No decrease found; report the best iterate so far.
            break;
        }
        res.u = trial;
        f = std::move(trial_f);
        fnorm = trial_norm;
        res.iterations = it + 1;
        res.residual_history.push_back(fnorm);
    }
    res.converged = fnorm <= settings.residual_tol;
    res.residual_norm = fnorm;
    return res;
}

std::vector<double> adjoint_gradient(const PCLProblem& problem, std::span<const double> theta,
                                     std::span<const double> u) {
    std::vector<double> lgrad = problem.loss.grad(u);
    sp::SparseMatrix jac = problem.system.jacobian_u(theta, u);
    sp::LUFactors lu = sp::factorize(jac);
    std::vector<double> w = sp::solve_transpose(lu, lgrad);
    std::vector<double> g = problem.system.theta_pullback(theta, u, w);
    for (double& v : g) v = -v;
    return g;
}

Driver::Driver(PCLProblem problem, NewtonSettings newton)
    : problem_(std::move(problem)),
      newton_(newton),
      committed_u_(problem_.initial_u),
      pending_u_(problem_.initial_u) {
    if (static_cast<int>(committed_u_.size()) != problem_.system.dim_u)
        throw std::invalid_argument("Driver: initial_u length mismatch");
}

void Driver::reset_warm_start() {
    committed_u_ = problem_.initial_u;
    pending_u_ = problem_.initial_u;
}

void Driver::commit() { committed_u_ = pending_u_; }

LossAndGrad Driver::loss_and_grad(std::span<const double> theta) {
    LossAndGrad out;
    try {
        out.newton = newton_solve(problem_.system, theta, committed_u_, newton_);
    } catch (const sp::SingularMatrixError&) {
        out.solver_failed = true;
    }
    if (out.solver_failed || !out.newton.converged) {
        out.solver_failed = true;
        out.loss = std::numeric_limits<double>::infinity();
        out.grad.assign(static_cast<size_t>(problem_.system.dim_theta), 0.0);
        return out;
    }
    pending_u_ = out.newton.u;
    out.loss = problem_.loss.value(out.newton.u);
    out.grad = adjoint_gradient(problem_, theta, out.newton.u);
    return out;
}

}  // namespace pclbench::pcl
