#include <doctest.h>

#include <cmath>
#include <random>

#include "pclbench/benchmarks/poisson1d.hpp"
#include "pclbench/optimize.hpp"
#include "pclbench/penalty.hpp"
#include "support/oracles.hpp"

using namespace pclbench;

namespace {

penalty::PenaltyProblem nn_poisson_penalty(int n, const nn::MLP& mlp,
                                           std::vector<double> u_obs, double lambda) {
    auto f = bench::nn_diffusivity(mlp);
    auto p = bench::make_poisson1d(n, std::move(f), [](double) { return -1.0; });
    auto pcl_prob = bench::poisson1d_pcl_problem(p, std::move(u_obs));
    penalty::PenaltyProblem pp;
    pp.system = pcl_prob.system;
    pp.loss = pcl_prob.loss;
    pp.lambda = lambda;
    return pp;
}

}  // namespace

TEST_CASE("lambda = 0 reduces to the data loss") {
    nn::MLP mlp({1, 4, 1});
    std::vector<double> u_obs(8, 0.1);
    auto pp = nn_poisson_penalty(9, mlp, u_obs, 0.0);

    auto theta = mlp.init_params(1);
    std::vector<double> u(8, 0.25);
    auto z = penalty::pack(pp, theta, u);
    auto r = penalty::penalty_loss_and_grad(pp, z);

    double expect = 0.0;
    for (double v : u) expect += (v - 0.1) * (v - 0.1);
    CHECK(r.value == doctest::Approx(expect).epsilon(1e-14));
    for (size_t i = 0; i < theta.size(); ++i) CHECK(r.grad[i] == 0.0);
    for (size_t i = 0; i < u.size(); ++i)
        CHECK(r.grad[theta.size() + i] == doctest::Approx(2.0 * (u[i] - 0.1)).epsilon(1e-14));
}

TEST_CASE("zero loss and gradient at a consistent optimum") {
    nn::MLP mlp({1, 6, 1});
    auto theta = mlp.init_params(3);
    theta.back() += 0.3;  // keep the diffusivity positive

    auto f = bench::nn_diffusivity(mlp);
    auto p = bench::make_poisson1d(11, std::move(f), [](double) { return -1.0; });
    auto u_star = bench::poisson1d_forward(p, theta);
    std::vector<double> obs;
    for (int i : p.observed) obs.push_back(u_star[static_cast<size_t>(i)]);

    auto pcl_prob = bench::poisson1d_pcl_problem(p, obs);
    penalty::PenaltyProblem pp{pcl_prob.system, pcl_prob.loss, 5.0};
    auto z = penalty::pack(pp, theta, u_star);
    auto r = penalty::penalty_loss_and_grad(pp, z);
    CHECK(r.value <= 1e-18);
    for (double g : r.grad) CHECK(std::abs(g) <= 1e-8);
}

TEST_CASE("penalty gradient matches FD over the joint variable") {
    nn::MLP mlp({1, 5, 1});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unit(-0.3, 0.3);
    std::vector<double> u_obs(8);
    for (double& v : u_obs) v = unit(rng);
    auto pp = nn_poisson_penalty(9, mlp, u_obs, 1.0);

    auto theta = mlp.init_params(12);
    theta.back() += 0.4;
    std::vector<double> u(8);
    for (double& v : u) v = 0.2 + unit(rng);
    auto z = penalty::pack(pp, theta, u);

    auto r = penalty::penalty_loss_and_grad(pp, z);
    auto fd = testsupport::fd_gradient(
        [&](std::span<const double> zz) { return penalty::penalty_loss_and_grad(pp, zz).value; },
        z, 1e-6);
    for (size_t i = 0; i < z.size(); ++i) {
        double tol = 1e-6 * std::max(1.0, std::abs(fd[i]));
        CHECK(std::abs(r.grad[i] - fd[i]) <= tol);
    }
}

TEST_CASE("penalized loss is affine in lambda at fixed z") {
    nn::MLP mlp({1, 4, 1});
    std::vector<double> u_obs(6, 0.05);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto theta = mlp.init_params(2);
    std::vector<double> u(6);
    for (double& v : u) v = unit(rng) * 0.3;

    for (int trial = 0; trial < 5; ++trial) {
        double l1 = 10.0 * unit(rng), l2 = 10.0 * unit(rng);
        auto p0 = nn_poisson_penalty(7, mlp, u_obs, 0.0);
        auto pa = nn_poisson_penalty(7, mlp, u_obs, l1);
        auto pb = nn_poisson_penalty(7, mlp, u_obs, l2);
        auto z = penalty::pack(p0, theta, u);

        double v0 = penalty::penalty_loss_and_grad(p0, z).value;
        double va = penalty::penalty_loss_and_grad(pa, z).value;
        double vb = penalty::penalty_loss_and_grad(pb, z).value;

        auto fvec = p0.system.residual(theta, u);
        double fsq = 0.0;
        for (double fv : fvec) fsq += fv * fv;
        CHECK(va == doctest::Approx(v0 + l1 * fsq).epsilon(1e-12));
        CHECK(vb == doctest::Approx(v0 + l2 * fsq).epsilon(1e-12));
    }
}

TEST_CASE("residual at the penalty minimizer shrinks as lambda grows") {
    // Model problem of the conditioning analysis: A u = theta y.
    sp::SparseMatrix a = sp::SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 3.0}});
    std::vector<double> y{1.0, 1.0};
    auto u0 = sp::solve(sp::factorize(a), y);
    // Observations deliberately inconsistent with the constraint so the
    // trade-off actually moves with lambda.
    std::vector<double> obs{u0[0] + 0.2, u0[1] - 0.1};

    penalty::PenaltyProblem pp;
    pp.system.dim_u = 2;
    pp.system.dim_theta = 1;
    pp.system.residual = [&](std::span<const double> theta, std::span<const double> u) {
        auto r = sp::spmv(a, u);
        for (size_t i = 0; i < r.size(); ++i) r[i] -= theta[0] * y[i];
        return r;
    };
    pp.system.jacobian_u = [&](std::span<const double>, std::span<const double>) { return a; };
    pp.system.theta_pullback = [&](std::span<const double>, std::span<const double>,
                                   std::span<const double> w) {
        return std::vector<double>{-(w[0] * y[0] + w[1] * y[1])};
    };
    pp.loss.value = [&](std::span<const double> u) {
        return (u[0] - obs[0]) * (u[0] - obs[0]) + (u[1] - obs[1]) * (u[1] - obs[1]);
    };
    pp.loss.grad = [&](std::span<const double> u) {
        return std::vector<double>{2.0 * (u[0] - obs[0]), 2.0 * (u[1] - obs[1])};
    };

    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1.0, 10.0, 100.0, 1000.0}) {
        pp.lambda = lambda;
        opt::LbfgsSettings st;
        st.max_iters = 2000;
        auto res = opt::minimize(
            [&](std::span<const double> z, std::vector<double>& g) {
                auto r = penalty::penalty_loss_and_grad(pp, z);
                g = r.grad;
                return r.value;
            },
            {0.5, 0.3, 0.3}, st);
        std::vector<double> theta, u;
        penalty::unpack(pp, res.z, theta, u);
        auto f = pp.system.residual(theta, u);
        double fn = std::sqrt(f[0] * f[0] + f[1] * f[1]);
        CHECK(fn <= prev + 1e-12);
        prev = fn;
    }
}

TEST_CASE("packing round-trips and validates lengths") {
    nn::MLP mlp({1, 3, 1});
    auto pp = nn_poisson_penalty(7, mlp, std::vector<double>(6, 0.0), 1.0);
    auto theta = mlp.init_params(4);
    std::vector<double> u(6, 0.1);
    auto z = penalty::pack(pp, theta, u);
    std::vector<double> t2, u2;
    penalty::unpack(pp, z, t2, u2);
    CHECK(t2 == theta);
    CHECK(u2 == u);
    CHECK_THROWS_AS(penalty::unpack(pp, std::vector<double>{1.0}, t2, u2), std::invalid_argument);
}
