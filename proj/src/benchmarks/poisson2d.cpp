#include "pclbench/benchmarks/poisson2d.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pclbench/autodiff.hpp"

namespace pclbench::bench {

TestFunctions test_function_set(int id) {
    auto clamped_pow = [](double e) {
        return [e](double u) { return 0.1 + std::pow(std::max(u, 0.0), e); };
    };
    auto clamped_pow_d = [](double e) {
        return [e](double u) { return u > 0.0 ? e * std::pow(u, e - 1.0) : 0.0; };
    };
    switch (id) {
        case 1:
            return {clamped_pow(3.1), clamped_pow_d(3.1), clamped_pow(3.5), clamped_pow_d(3.5)};
        case 2:
            return {[](double u) { return 0.1 + 0.1 * std::cos(u); },
                    [](double u) { return -0.1 * std::sin(u); },
                    [](double u) { return 0.1 + 0.1 * std::sin(u); },
                    [](double u) { return 0.1 * std::cos(u); }};
        case 3:
            return {[](double u) { return 0.1 + u * u * u; },
                    [](double u) { return 3.0 * u * u; },
                    [](double u) { return 0.1 + 0.1 / (1.0 + u * u); },
                    [](double u) { return -0.2 * u / ((1.0 + u * u) * (1.0 + u * u)); }};
        case 4:
            return {[](double u) { return 0.1 + u * u; }, [](double u) { return 2.0 * u; },
                    [](double u) { return 0.1 + std::max(0.0, u - 0.3); },
                    [](double u) { return u > 0.3 ? 1.0 : 0.0; }};
        default:
            throw std::invalid_argument("test_function_set: id must be 1..4");
    }
}

StaggeredGrid make_staggered_grid(int grid_n) {
    if (grid_n < 4) throw std::invalid_argument("make_staggered_grid: need at least 4 nodes");
    StaggeredGrid g;
    g.grid_n = grid_n;
    const int ni = grid_n - 2;           // interior nodes per side
    const double inv_h = grid_n - 1.0;   // 1/h
    const int n_int = ni * ni;

    // x-midpoints between nodes (i,j) and (i+1,j): i = 0..grid_n-2, interior j.
    auto xm_index = [&](int i, int j) { return (j - 1) * (grid_n - 1) + i; };
    const int n_xm = (grid_n - 1) * ni;
    // y-midpoints between nodes (i,j) and (i,j+1): interior i, j = 0..grid_n-2.
    auto ym_index = [&](int i, int j) { return j * ni + (i - 1); };
    const int n_ym = ni * (grid_n - 1);

    auto interior = [&](int i, int j) { return i >= 1 && i <= ni && j >= 1 && j <= ni; };

    std::vector<sp::Triplet> ax, dx, ay, dy, gx, gy;
    for (int j = 1; j <= ni; ++j)
        for (int i = 0; i <= grid_n - 2; ++i) {
            const int m = xm_index(i, j);
            if (interior(i, j)) {
                ax.push_back({m, g.interior_index(i, j), 0.5});
                dx.push_back({m, g.interior_index(i, j), -inv_h});
            }
            if (interior(i + 1, j)) {
                ax.push_back({m, g.interior_index(i + 1, j), 0.5});
                dx.push_back({m, g.interior_index(i + 1, j), inv_h});
            }
        }
    for (int j = 0; j <= g.grid_n - 2; ++j)
        for (int i = 1; i <= ni; ++i) {
            const int m = ym_index(i, j);
            if (interior(i, j)) {
                ay.push_back({m, g.interior_index(i, j), 0.5});
                dy.push_back({m, g.interior_index(i, j), -inv_h});
            }
            if (interior(i, j + 1)) {
                ay.push_back({m, g.interior_index(i, j + 1), 0.5});
                dy.push_back({m, g.interior_index(i, j + 1), inv_h});
            }
        }
    for (int j = 1; j <= ni; ++j)
        for (int i = 1; i <= ni; ++i) {
            const int r = g.interior_index(i, j);
            gx.push_back({r, xm_index(i, j), inv_h});
            gx.push_back({r, xm_index(i - 1, j), -inv_h});
            gy.push_back({r, ym_index(i, j), inv_h});
            gy.push_back({r, ym_index(i, j - 1), -inv_h});
        }

    g.avg_x = sp::SparseMatrix::from_triplets(n_xm, n_int, std::move(ax));
    g.diff_x = sp::SparseMatrix::from_triplets(n_xm, n_int, std::move(dx));
    g.avg_y = sp::SparseMatrix::from_triplets(n_ym, n_int, std::move(ay));
    g.diff_y = sp::SparseMatrix::from_triplets(n_ym, n_int, std::move(dy));
    g.flux_x = sp::SparseMatrix::from_triplets(n_int, n_xm, std::move(gx));
    g.flux_y = sp::SparseMatrix::from_triplets(n_int, n_ym, std::move(gy));
    return g;
}

jacprop::Field poisson2d_residual_field(const StaggeredGrid& grid, const TestFunctions& f,
                                        std::span<const double> u,
                                        std::span<const double> source) {
    if (static_cast<int>(u.size()) != grid.dim_u())
        throw std::invalid_argument("poisson2d: interior vector length mismatch");
    jacprop::DiscretizationOperators id_ops;
    id_ops.value_map = sp::SparseMatrix::identity(grid.dim_u());
    jacprop::Field uf = jacprop::from_coefficients(id_ops, u);

    jacprop::Field f1m = jacprop::unary(jacprop::apply(grid.avg_x, uf), f.f1, f.df1);
    jacprop::Field f2m = jacprop::unary(jacprop::apply(grid.avg_y, uf), f.f2, f.df2);
    jacprop::Field rx = jacprop::apply(grid.flux_x, jacprop::mul(f1m, jacprop::apply(grid.diff_x, uf)));
    jacprop::Field ry = jacprop::apply(grid.flux_y, jacprop::mul(f2m, jacprop::apply(grid.diff_y, uf)));
    jacprop::Field divergence = jacprop::add(rx, ry);
    jacprop::Field src = jacprop::constant(std::vector<double>(source.begin(), source.end()),
                                           grid.dim_u());
    return jacprop::sub(jacprop::neg(divergence), src);
}

PoissonNNProblem::PoissonNNProblem(int grid_n, int set_id, nn::MLP mlp, double source_scale)
    : grid_(make_staggered_grid(grid_n)),
      set_id_(set_id),
      mlp_(std::move(mlp)),
      source_scale_(source_scale),
      true_f_(test_function_set(set_id)) {
    if (mlp_.output_width() != 2)
        throw std::invalid_argument("PoissonNNProblem: network must output (f1, f2)");
    if (!(source_scale_ > 0.0))
        throw std::invalid_argument("PoissonNNProblem: source scale must be positive");
    const int ni = grid_n - 2;
    source_.resize(static_cast<size_t>(ni) * ni);
    for (int j = 1; j <= ni; ++j)
        for (int i = 1; i <= ni; ++i)
            source_[static_cast<size_t>(grid_.interior_index(i, j))] =
                source_scale_ * std::sin(std::numbers::pi * grid_.coord(i)) *
                std::sin(std::numbers::pi * grid_.coord(j));
}

pcl::ConstraintSystem PoissonNNProblem::true_system() const {
    pcl::ConstraintSystem sys;
    sys.dim_u = grid_.dim_u();
    sys.dim_theta = 0;
    sys.residual = [this](std::span<const double>, std::span<const double> u) {
        return poisson2d_residual_field(grid_, true_f_, u, source_).values;
    };
    sys.jacobian_u = [this](std::span<const double>, std::span<const double> u) {
        return poisson2d_residual_field(grid_, true_f_, u, source_).jacobian;
    };
    sys.theta_pullback = [](std::span<const double>, std::span<const double>,
                            std::span<const double>) { return std::vector<double>{}; };
    return sys;
}

TestFunctions PoissonNNProblem::nn_functions(std::span<const double> theta) const {
    std::vector<double> th(theta.begin(), theta.end());
    const nn::MLP& net = mlp_;
    TestFunctions f;
    f.f1 = [net, th](double u) { return net.forward(th, std::span<const double>(&u, 1))[0]; };
    f.f2 = [net, th](double u) { return net.forward(th, std::span<const double>(&u, 1))[1]; };
    f.df1 = [net, th](double u) {
        return net.input_derivative(th, std::span<const double>(&u, 1))[0];
    };
    f.df2 = [net, th](double u) {
        return net.input_derivative(th, std::span<const double>(&u, 1))[1];
    };
    return f;
}

pcl::ConstraintSystem PoissonNNProblem::nn_system() const {
    pcl::ConstraintSystem sys;
    sys.dim_u = grid_.dim_u();
    sys.dim_theta = mlp_.param_count();
    sys.residual = [this](std::span<const double> theta, std::span<const double> u) {
        return poisson2d_residual_field(grid_, nn_functions(theta), u, source_).values;
    };
    sys.jacobian_u = [this](std::span<const double> theta, std::span<const double> u) {
        return poisson2d_residual_field(grid_, nn_functions(theta), u, source_).jacobian;
    };
    sys.theta_pullback = [this](std::span<const double> theta, std::span<const double> u,
                                std::span<const double> w) {
        // w^T F = -(G_x^T w) . (f1(um_x) o du_x) - (G_y^T w) . (f2(um_y) o du_y) + const;
        // only the network outputs depend on theta.
        std::vector<double> um_x = sp::spmv(grid_.avg_x, u);
        std::vector<double> um_y = sp::spmv(grid_.avg_y, u);
        std::vector<double> du_x = sp::spmv(grid_.diff_x, u);
        std::vector<double> du_y = sp::spmv(grid_.diff_y, u);
        std::vector<double> wx = sp::spmv_transpose(grid_.flux_x, w);
        std::vector<double> wy = sp::spmv_transpose(grid_.flux_y, w);
        for (size_t i = 0; i < wx.size(); ++i) wx[i] *= -du_x[i];
        for (size_t i = 0; i < wy.size(); ++i) wy[i] *= -du_y[i];

        ad::Tape tape;
        int theta_node = tape.add_input(std::vector<double>(theta.begin(), theta.end()));
        int fx = mlp_.tape_forward(tape, theta_node, um_x)[0];
        int fy = mlp_.tape_forward(tape, theta_node, um_y)[1];
        int total = tape.add(tape.dot(tape.constant(std::move(wx)), fx),
                             tape.dot(tape.constant(std::move(wy)), fy));
        tape.set_output(total);
        return ad::reverse_grad(tape, std::array{theta_node});
    };
    return sys;
}

std::vector<double> PoissonNNProblem::constant_diffusivity_solution() const {
    TestFunctions constf{[](double) { return 0.1; }, [](double) { return 0.0; },
                         [](double) { return 0.1; }, [](double) { return 0.0; }};
    pcl::ConstraintSystem sys;
    sys.dim_u = grid_.dim_u();
    sys.dim_theta = 0;
    sys.residual = [this, constf](std::span<const double>, std::span<const double> u) {
        return poisson2d_residual_field(grid_, constf, u, source_).values;
    };
    sys.jacobian_u = [this, constf](std::span<const double>, std::span<const double> u) {
        return poisson2d_residual_field(grid_, constf, u, source_).jacobian;
    };
    auto res = pcl::newton_solve(sys, {}, std::vector<double>(static_cast<size_t>(grid_.dim_u()), 0.0));
    if (!res.converged)
        throw std::runtime_error("poisson2d: constant-diffusivity solve did not converge");
    return res.u;
}

std::vector<double> PoissonNNProblem::forward_true() const {
    auto sys = true_system();
    auto res = pcl::newton_solve(sys, {}, std::vector<double>(static_cast<size_t>(grid_.dim_u()), 0.0));
    if (!res.converged) throw std::runtime_error("poisson2d: true forward solve did not converge");
    return res.u;
}

std::vector<double> PoissonNNProblem::forward_nn(std::span<const double> theta,
                                                 std::span<const double> u0) const {
    auto sys = nn_system();
    auto res = pcl::newton_solve(sys, theta, std::vector<double>(u0.begin(), u0.end()));
    if (!res.converged) throw std::runtime_error("poisson2d: NN forward solve did not converge");
    return res.u;
}

double PoissonNNProblem::calibrate_source_scale(int grid_n, int set_id, double target_max_u) {
    auto max_u_for = [&](double s) {
        nn::MLP dummy({1, 2, 2});
        PoissonNNProblem p(grid_n, set_id, dummy, s);
        auto u = p.forward_true();
        double m = 0.0;
        for (double v : u) m = std::max(m, v);
        return m;
    };
    double lo = 0.0, hi = 1.0;
    while (max_u_for(hi) < target_max_u) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("calibrate_source_scale: diverged");
    }
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (max_u_for(mid) < target_max_u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

pcl::Loss PoissonNNProblem::loss(std::vector<double> u_obs, std::vector<int> observed) const {
    if (observed.empty()) {
        observed.resize(static_cast<size_t>(grid_.dim_u()));
        for (int i = 0; i < grid_.dim_u(); ++i) observed[static_cast<size_t>(i)] = i;
    }
    if (u_obs.size() != observed.size())
        throw std::invalid_argument("poisson2d loss: observation length mismatch");
    for (int i : observed)
        if (i < 0 || i >= grid_.dim_u())
            throw std::invalid_argument("poisson2d loss: observation index out of range");
    const int dim = grid_.dim_u();
    pcl::Loss l;
    l.value = [u_obs, observed](std::span<const double> u) {
        double s = 0.0;
        for (size_t k = 0; k < observed.size(); ++k) {
            const double d = u[static_cast<size_t>(observed[k])] - u_obs[k];
            s += d * d;
        }
        return s;
    };
    l.grad = [u_obs, observed, dim](std::span<const double> u) {
        std::vector<double> g(static_cast<size_t>(dim), 0.0);
        for (size_t k = 0; k < observed.size(); ++k)
            g[static_cast<size_t>(observed[k])] = 2.0 * (u[static_cast<size_t>(observed[k])] - u_obs[k]);
        return g;
    };
    return l;
}

pcl::PCLProblem PoissonNNProblem::pcl_problem(std::vector<double> u_obs,
                                              std::vector<int> observed) const {
    pcl::PCLProblem prob;
    prob.system = nn_system();
    prob.loss = loss(std::move(u_obs), std::move(observed));
    prob.initial_u = constant_diffusivity_solution();
    return prob;
}

double PoissonNNProblem::nn_error_metric(std::span<const double> theta) const {
    const int n_pts = 100;
    std::vector<double> u(n_pts);
    for (int i = 0; i < n_pts; ++i) u[static_cast<size_t>(i)] = 0.6 * i / (n_pts - 1.0);
    auto out = mlp_.forward(theta, u);
    double s = 0.0;
    for (int i = 0; i < n_pts; ++i) {
        const double ui = u[static_cast<size_t>(i)];
        const double d1 = true_f_.f1(ui) - out[static_cast<size_t>(2 * i)];
        const double d2 = true_f_.f2(ui) - out[static_cast<size_t>(2 * i + 1)];
        s += d1 * d1 + d2 * d2;
    }
    return std::sqrt(s);
}

}  // namespace pclbench::bench
