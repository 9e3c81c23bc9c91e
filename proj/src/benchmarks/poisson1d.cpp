#include "pclbench/benchmarks/poisson1d.hpp"

#include <cmath>
#include <stdexcept>

namespace pclbench::bench {

Diffusivity1D analytic_diffusivity(std::function<double(double)> f,
                                   std::function<double(double)> df) {
    Diffusivity1D d;
    d.dim_theta = 0;
    d.value = [f = std::move(f)](double u, std::span<const double>) { return f(u); };
    d.du = [df = std::move(df)](double u, std::span<const double>) { return df(u); };
    d.tape_values = [value = d.value](ad::Tape& tape, int, std::span<const double> mids) {
        std::vector<double> v(mids.size());
        for (size_t i = 0; i < mids.size(); ++i) v[i] = value(mids[i], {});
        return tape.constant(std::move(v));
    };
    return d;
}

Diffusivity1D nn_diffusivity(const nn::MLP& mlp) {
    if (mlp.output_width() != 1)
        throw std::invalid_argument("nn_diffusivity: network must have one output");
    Diffusivity1D d;
    d.dim_theta = mlp.param_count();
    d.value = [mlp](double u, std::span<const double> theta) {
        return mlp.forward(theta, std::span<const double>(&u, 1))[0];
    };
    d.du = [mlp](double u, std::span<const double> theta) {
        return mlp.input_derivative(theta, std::span<const double>(&u, 1))[0];
    };
    d.tape_values = [mlp](ad::Tape& tape, int theta_node, std::span<const double> mids) {
        return mlp.tape_forward(tape, theta_node, mids)[0];
    };
    return d;
}

Poisson1DProblem make_poisson1d(int n, Diffusivity1D f,
                                const std::function<double(double)>& g) {
    if (n < 3) throw std::invalid_argument("make_poisson1d: need at least 3 intervals");
    Poisson1DProblem p;
    p.n = n;
    p.f = std::move(f);
    p.source.resize(static_cast<size_t>(n - 1));
    for (int i = 1; i < n; ++i) p.source[static_cast<size_t>(i - 1)] = g(static_cast<double>(i) / n);
    p.observed.resize(static_cast<size_t>(n - 1));
    for (int i = 0; i < n - 1; ++i) p.observed[static_cast<size_t>(i)] = i;
    return p;
}

namespace {

// Full nodal array with the zero boundary values in place.
std::vector<double> padded(const Poisson1DProblem& p, std::span<const double> u) {
    if (static_cast<int>(u.size()) != p.dim_u())
        throw std::invalid_argument("poisson1d: interior vector length mismatch");
    std::vector<double> full(static_cast<size_t>(p.n) + 1, 0.0);
    for (int i = 0; i < p.dim_u(); ++i) full[static_cast<size_t>(i) + 1] = u[static_cast<size_t>(i)];
    return full;
}

}  // namespace

std::vector<double> poisson1d_residual(const Poisson1DProblem& p, std::span<const double> theta,
                                       std::span<const double> u) {
    const double inv_h2 = 1.0 / (p.h() * p.h());
    std::vector<double> full = padded(p, u);
    std::vector<double> res(static_cast<size_t>(p.dim_u()));
    for (int node = 1; node < p.n; ++node) {
        const double m_fwd = 0.5 * (full[static_cast<size_t>(node)] + full[static_cast<size_t>(node) + 1]);
        const double m_bwd = 0.5 * (full[static_cast<size_t>(node) - 1] + full[static_cast<size_t>(node)]);
        res[static_cast<size_t>(node - 1)] =
            p.f.value(m_fwd, theta) * (full[static_cast<size_t>(node) + 1] - full[static_cast<size_t>(node)]) * inv_h2 -
            p.f.value(m_bwd, theta) * (full[static_cast<size_t>(node)] - full[static_cast<size_t>(node) - 1]) * inv_h2 -
            p.source[static_cast<size_t>(node - 1)];
    }
    return res;
}

sp::SparseMatrix poisson1d_jacobian(const Poisson1DProblem& p, std::span<const double> theta,
                                    std::span<const double> u) {
    const double inv_h2 = 1.0 / (p.h() * p.h());
    std::vector<double> full = padded(p, u);
    std::vector<sp::Triplet> t;
    t.reserve(static_cast<size_t>(3 * p.dim_u()));
    for (int node = 1; node < p.n; ++node) {
        const int row = node - 1;
        const double m_fwd = 0.5 * (full[static_cast<size_t>(node)] + full[static_cast<size_t>(node) + 1]);
        const double m_bwd = 0.5 * (full[static_cast<size_t>(node) - 1] + full[static_cast<size_t>(node)]);
        const double d_fwd = full[static_cast<size_t>(node) + 1] - full[static_cast<size_t>(node)];
        const double d_bwd = full[static_cast<size_t>(node)] - full[static_cast<size_t>(node) - 1];
        const double f_fwd = p.f.value(m_fwd, theta);
        const double f_bwd = p.f.value(m_bwd, theta);
        const double df_fwd = p.f.du(m_fwd, theta);
        const double df_bwd = p.f.du(m_bwd, theta);

        auto put = [&](int node_col, double v) {
            if (node_col >= 1 && node_col < p.n) t.push_back({row, node_col - 1, v});
        };
        // d/du_node and d/du_{node+1} of the forward flux term.
        put(node, 0.5 * df_fwd * d_fwd * inv_h2 - f_fwd * inv_h2);
        put(node + 1, 0.5 * df_fwd * d_fwd * inv_h2 + f_fwd * inv_h2);
        // d/du_{node-1} and d/du_node of the backward flux term.
        put(node, -0.5 * df_bwd * d_bwd * inv_h2 - f_bwd * inv_h2);
        put(node - 1, -0.5 * df_bwd * d_bwd * inv_h2 + f_bwd * inv_h2);
    }
    return sp::SparseMatrix::from_triplets(p.dim_u(), p.dim_u(), std::move(t));
}

std::vector<double> poisson1d_loss_grad(const Poisson1DProblem& p, std::span<const double> u,
                                        std::span<const double> u_obs) {
    std::vector<double> g(static_cast<size_t>(p.dim_u()), 0.0);
    for (size_t k = 0; k < p.observed.size(); ++k) {
        int i = p.observed[k];
        g[static_cast<size_t>(i)] = 2.0 * (u[static_cast<size_t>(i)] - u_obs[k]);
    }
    return g;
}

pcl::ConstraintSystem poisson1d_constraint_system(const Poisson1DProblem& p) {
    pcl::ConstraintSystem sys;
    sys.dim_u = p.dim_u();
    sys.dim_theta = p.f.dim_theta;
    sys.residual = [p](std::span<const double> theta, std::span<const double> u) {
        return poisson1d_residual(p, theta, u);
    };
    sys.jacobian_u = [p](std::span<const double> theta, std::span<const double> u) {
        return poisson1d_jacobian(p, theta, u);
    };
    sys.theta_pullback = [p](std::span<const double> theta, std::span<const double> u,
                             std::span<const double> w) -> std::vector<double> {
        if (p.f.dim_theta == 0) return {};
        const double inv_h2 = 1.0 / (p.h() * p.h());
        std::vector<double> full(static_cast<size_t>(p.n) + 1, 0.0);
        for (int i = 0; i < p.dim_u(); ++i)
            full[static_cast<size_t>(i) + 1] = u[static_cast<size_t>(i)];

        // Midpoints m_j between nodes j and j+1, j = 0..n-1.
        std::vector<double> mids(static_cast<size_t>(p.n));
        for (int j = 0; j < p.n; ++j)
            mids[static_cast<size_t>(j)] =
                0.5 * (full[static_cast<size_t>(j)] + full[static_cast<size_t>(j) + 1]);

        ad::Tape tape;
        int theta_node = tape.add_input(std::vector<double>(theta.begin(), theta.end()));
        int f_m = p.f.tape_values(tape, theta_node, mids);

        // w^T F with u (and hence the midpoints) held constant:
        // F_row = f(m_{node}) c_fwd - f(m_{node-1}) c_bwd - g.
        std::vector<double> c_fwd(static_cast<size_t>(p.dim_u()));
        std::vector<double> c_bwd(static_cast<size_t>(p.dim_u()));
        std::vector<int> idx_fwd(static_cast<size_t>(p.dim_u()));
        std::vector<int> idx_bwd(static_cast<size_t>(p.dim_u()));
        for (int node = 1; node < p.n; ++node) {
            c_fwd[static_cast<size_t>(node - 1)] =
                (full[static_cast<size_t>(node) + 1] - full[static_cast<size_t>(node)]) * inv_h2;
            c_bwd[static_cast<size_t>(node - 1)] =
                (full[static_cast<size_t>(node)] - full[static_cast<size_t>(node) - 1]) * inv_h2;
            idx_fwd[static_cast<size_t>(node - 1)] = node;
            idx_bwd[static_cast<size_t>(node - 1)] = node - 1;
        }
        int term_fwd = tape.mul(tape.record_gather(f_m, std::move(idx_fwd)),
                                tape.constant(std::move(c_fwd)));
        int term_bwd = tape.mul(tape.record_gather(f_m, std::move(idx_bwd)),
                                tape.constant(std::move(c_bwd)));
        int f_res = tape.sub(term_fwd, term_bwd);
        int w_node = tape.constant(std::vector<double>(w.begin(), w.end()));
        tape.set_output(tape.dot(w_node, f_res));
        return ad::reverse_grad(tape, std::array{theta_node});
    };
    return sys;
}

std::vector<double> poisson1d_forward(const Poisson1DProblem& p, std::span<const double> theta) {
    auto sys = poisson1d_constraint_system(p);
    auto res = pcl::newton_solve(sys, theta, std::vector<double>(static_cast<size_t>(p.dim_u()), 0.0));
    if (!res.converged) throw std::runtime_error("poisson1d_forward: Newton did not converge");
    return res.u;
}

pcl::PCLProblem poisson1d_pcl_problem(const Poisson1DProblem& p, std::vector<double> u_obs) {
    if (u_obs.size() != p.observed.size())
        throw std::invalid_argument("poisson1d_pcl_problem: observation length mismatch");
    pcl::PCLProblem prob;
    prob.system = poisson1d_constraint_system(p);
    prob.loss.value = [p, u_obs](std::span<const double> u) {
        double s = 0.0;
        for (size_t k = 0; k < p.observed.size(); ++k) {
            double d = u[static_cast<size_t>(p.observed[k])] - u_obs[k];
            s += d * d;
        }
        return s;
    };
    prob.loss.grad = [p, u_obs](std::span<const double> u) {
        return poisson1d_loss_grad(p, u, u_obs);
    };
    prob.initial_u.assign(static_cast<size_t>(p.dim_u()), 0.0);
    return prob;
}

}  // namespace pclbench::bench
