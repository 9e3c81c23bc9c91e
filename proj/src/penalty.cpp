#include "pclbench/penalty.hpp"

#include <stdexcept>

namespace pclbench::penalty {

void unpack(const PenaltyProblem& problem, std::span<const double> z, std::vector<double>& theta,
            std::vector<double>& u) {
    if (static_cast<int>(z.size()) != problem.dim_z())
        throw std::invalid_argument("penalty: z length mismatch");
    theta.assign(z.begin(), z.begin() + problem.system.dim_theta);
    u.assign(z.begin() + problem.system.dim_theta, z.end());
}

std::vector<double> pack(const PenaltyProblem& problem, std::span<const double> theta,
                         std::span<const double> u) {
    if (static_cast<int>(theta.size()) != problem.system.dim_theta ||
        static_cast<int>(u.size()) != problem.system.dim_u)
        throw std::invalid_argument("penalty: pack length mismatch");
    std::vector<double> z;
    z.reserve(theta.size() + u.size());
    z.insert(z.end(), theta.begin(), theta.end());
    z.insert(z.end(), u.begin(), u.end());
    return z;
}

PenaltyEval penalty_loss_and_grad(const PenaltyProblem& problem, std::span<const double> z) {
    if (problem.lambda < 0.0) throw std::invalid_argument("penalty: lambda must be >= 0");
    std::vector<double> theta, u;
    unpack(problem, z, theta, u);

    PenaltyEval out;
    out.grad.assign(z.size(), 0.0);

    out.value = problem.loss.value(u);
    std::vector<double> lg = problem.loss.grad(u);
    for (size_t i = 0; i < lg.size(); ++i) out.grad[theta.size() + i] = lg[i];

    if (problem.lambda == 0.0) return out;

    std::vector<double> f = problem.system.residual(theta, u);
    double fsq = 0.0;
    for (double v : f) fsq += v * v;
    out.value += problem.lambda * fsq;

    // u-block: 2 lambda J^T F through the propagated Jacobian.
    sp::SparseMatrix jac = problem.system.jacobian_u(theta, u);
    std::vector<double> jtf = sp::spmv_transpose(jac, f);
    for (size_t i = 0; i < jtf.size(); ++i)
        out.grad[theta.size() + i] += 2.0 * problem.lambda * jtf[i];

    // theta-block: 2 lambda grad_theta(w^T F) with w = F held constant.
    std::vector<double> tg = problem.system.theta_pullback(theta, u, f);
    for (size_t i = 0; i < tg.size(); ++i) out.grad[i] += 2.0 * problem.lambda * tg[i];
    return out;
}

}  // namespace pclbench::penalty
