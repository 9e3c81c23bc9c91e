#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pclbench/jacprop.hpp"
#include "support/oracles.hpp"

using namespace pclbench;
namespace jp = pclbench::jacprop;
using testsupport::to_dense;

namespace {

// Uniform nx*ny grid with nodal-value coefficients: central first
// differences inside, one-sided at the edges (so constants are annihilated).
jp::DiscretizationOperators interior_grid_ops(int nx, int ny) {
    const double h = 1.0 / (nx + 1);
    const int n = nx * ny;
    auto idx = [&](int i, int j) { return j * nx + i; };
    std::vector<sp::Triplet> dx, dy;
    auto stencil_1d = [&](std::vector<sp::Triplet>& out, int r, int lo, int hi, int at) {
        if (lo >= 0 && hi >= 0) {
            out.push_back({r, lo, -1.0 / (2.0 * h)});
            out.push_back({r, hi, 1.0 / (2.0 * h)});
        } else if (hi >= 0) {
            out.push_back({r, at, -1.0 / h});
            out.push_back({r, hi, 1.0 / h});
        } else {
            out.push_back({r, lo, -1.0 / h});
            out.push_back({r, at, 1.0 / h});
        }
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int r = idx(i, j);
            stencil_1d(dx, r, i > 0 ? idx(i - 1, j) : -1, i + 1 < nx ? idx(i + 1, j) : -1, r);
            stencil_1d(dy, r, j > 0 ? idx(i, j - 1) : -1, j + 1 < ny ? idx(i, j + 1) : -1, r);
        }
    jp::DiscretizationOperators ops;
    ops.value_map = sp::SparseMatrix::identity(n);
    ops.dx = sp::SparseMatrix::from_triplets(n, n, std::move(dx));
    ops.dy = sp::SparseMatrix::from_triplets(n, n, std::move(dy));
    return ops;
}

std::vector<double> random_vector(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = dist(rng);
    return v;
}

// The worked residual: F(u) = div((1 + u^2) grad u).
jp::Field worked_residual(const jp::DiscretizationOperators& ops, std::span<const double> c) {
    jp::Field u = jp::from_coefficients(ops, c);
    jp::VectorField gu = jp::grad(ops, u);
    jp::Field coeff = jp::add_scalar(jp::mul(u, u), 1.0);
    return jp::div(ops, jp::mul(coeff, gu));
}

}  // namespace

TEST_CASE("from_coefficients") {
    jp::DiscretizationOperators ops;
    ops.value_map = sp::SparseMatrix::identity(3);
    auto f = jp::from_coefficients(ops, std::vector<double>{1.0, 2.0, 3.0});
    CHECK(f.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(to_dense(f.jacobian).isIdentity(1e-15));

    auto z = jp::from_coefficients(ops, std::vector<double>{0.0, 0.0, 0.0});
    CHECK(z.values == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(to_dense(z.jacobian).isIdentity(1e-15));  // jacobian is still M

    CHECK_THROWS_AS(jp::from_coefficients(ops, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("from_coefficients matches the FD oracle for a linear map") {
    auto m = testsupport::random_sparse(5, 5, 3, 0.5);
    jp::DiscretizationOperators ops;
    ops.value_map = m;
    auto c = random_vector(5, 10);
    auto f = jp::from_coefficients(ops, c);
    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) { return sp::spmv(m, x); }, c);
    CHECK(to_dense(f.jacobian).isApprox(oracle, 1e-7));
}

TEST_CASE("grad of a constant field vanishes") {
    auto ops = interior_grid_ops(4, 4);
    jp::Field c = jp::constant(std::vector<double>(16, 2.5), 16);
    auto g = jp::grad(ops, c);
    for (double v : g.x.values) CHECK(v == 0.0);
    for (double v : g.y.values) CHECK(v == 0.0);
    CHECK(g.x.jacobian.nnz() == 0);
}

TEST_CASE("grad jacobian equals M_x for the primal field") {
    auto ops = interior_grid_ops(5, 5);
    auto c = random_vector(25, 4);
    auto g = jp::grad(ops, jp::from_coefficients(ops, c));
    CHECK(to_dense(g.x.jacobian).isApprox(to_dense(ops.dx), 1e-14));
    CHECK(to_dense(g.y.jacobian).isApprox(to_dense(ops.dy), 1e-14));
}

TEST_CASE("grad matches the dense FD oracle on a 6x6 grid") {
    auto ops = interior_grid_ops(6, 6);
    auto c = random_vector(36, 5);
    auto g = jp::grad(ops, jp::from_coefficients(ops, c));
    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) { return sp::spmv(ops.dx, x); }, c);
    CHECK((to_dense(g.x.jacobian) - oracle).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("mul follows the product rule") {
    auto ops = interior_grid_ops(3, 3);
    auto c = random_vector(9, 6);
    jp::Field f = jp::from_coefficients(ops, c);

    jp::Field one = jp::constant(std::vector<double>(9, 1.0), 9);
    jp::Field same = jp::mul(f, one);
    CHECK(to_dense(same.jacobian).isApprox(to_dense(f.jacobian), 1e-14));
    for (size_t i = 0; i < same.values.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(f.values[i]));

    jp::Field zero = jp::constant(std::vector<double>(9, 0.0), 9);
    jp::Field z = jp::mul(f, zero);
    for (double v : z.values) CHECK(v == 0.0);
    CHECK(to_dense(z.jacobian).cwiseAbs().maxCoeff() == 0.0);

    // f * f against FD: d(f^2)/dc = 2 diag(f) J_f.
    jp::Field sq = jp::mul(f, f);
    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) {
            auto v = sp::spmv(ops.value_map, x);
            for (double& t : v) t *= t;
            return v;
        },
        c);
    CHECK((to_dense(sq.jacobian) - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("unary rules") {
    auto ops = interior_grid_ops(3, 3);
    jp::DiscretizationOperators small;
    small.value_map = sp::SparseMatrix::identity(2);
    auto f2 = jp::from_coefficients(small, std::vector<double>{1.0, 2.0});
    auto sq = jp::unary(f2, [](double u) { return u * u; }, [](double u) { return 2.0 * u; });
    CHECK(sq.values == std::vector<double>{1.0, 4.0});
    CHECK(sq.jacobian.coeff(0, 0) == 2.0);
    CHECK(sq.jacobian.coeff(1, 1) == 4.0);

    auto ident = jp::unary(f2, [](double u) { return u; }, [](double) { return 1.0; });
    CHECK(ident.values == f2.values);
    CHECK(to_dense(ident.jacobian).isApprox(to_dense(f2.jacobian), 1e-15));

    auto c = random_vector(9, 42);
    auto f = jp::from_coefficients(ops, c);
    auto th = jp::unary(f, [](double u) { return std::tanh(u); },
                        [](double u) { return 1.0 - std::tanh(u) * std::tanh(u); });
    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) {
            std::vector<double> v(x.begin(), x.end());
            for (double& t : v) t = std::tanh(t);
            return v;
        },
        c);
    CHECK((to_dense(th.jacobian) - oracle).cwiseAbs().maxCoeff() < 1e-7);

    CHECK_THROWS_AS(jp::unary(f2, [](double u) { return std::log(u - 5.0); },
                              [](double u) { return 1.0 / (u - 5.0); }),
                    std::domain_error);
}

TEST_CASE("linear rules: add, add_scalar, sub, neg") {
    auto ops = interior_grid_ops(3, 3);
    auto c = random_vector(9, 1);
    auto f = jp::from_coefficients(ops, c);
    auto g = jp::unary(f, [](double u) { return std::sin(u); },
                       [](double u) { return std::cos(u); });

    auto shifted = jp::add_scalar(f, 1.0);  // 1 + f keeps the Jacobian
    CHECK(to_dense(shifted.jacobian).isApprox(to_dense(f.jacobian), 1e-15));
    CHECK(shifted.values[0] == doctest::Approx(f.values[0] + 1.0));

    auto diff = jp::sub(f, f);
    for (double v : diff.values) CHECK(v == 0.0);
    CHECK(to_dense(diff.jacobian).cwiseAbs().maxCoeff() == 0.0);

    auto s = jp::add(f, g);
    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) {
            std::vector<double> v(x.begin(), x.end());
            for (double& t : v) t = t + std::sin(t);
            return v;
        },
        c);
    CHECK((to_dense(s.jacobian) - oracle).cwiseAbs().maxCoeff() < 1e-7);

    auto n = jp::neg(f);
    CHECK(to_dense(n.jacobian).isApprox(-to_dense(f.jacobian), 1e-15));
}

TEST_CASE("div of a constant vector field vanishes") {
    auto ops = interior_grid_ops(4, 4);
    jp::VectorField v{jp::constant(std::vector<double>(16, 3.0), 16),
                      jp::constant(std::vector<double>(16, -2.0), 16)};
    auto d = jp::div(ops, v);
    for (double x : d.values) CHECK(x == 0.0);
}

TEST_CASE("worked residual matches the dense FD Jacobian on an 8x8 grid") {
    auto ops = interior_grid_ops(8, 8);
    auto c = random_vector(64, 99, -0.8, 0.8);
    jp::Field f = worked_residual(ops, c);

    auto oracle = testsupport::fd_jacobian(
        [&](std::span<const double> x) { return worked_residual(ops, x).values; }, c, 1e-6);
    CHECK((to_dense(f.jacobian) - oracle).cwiseAbs().maxCoeff() < 1e-6);

    // Nonzero pattern contained in the closure of the 5-point stencil.
    auto idx = [&](int r) { return std::pair{r % 8, r / 8}; };
    for (int r = 0; r < 64; ++r) {
        auto [ri, rj] = idx(r);
        for (int ccol : f.jacobian.row_cols(r)) {
            auto [ci, cj] = idx(ccol);
            CHECK(std::abs(ri - ci) + std::abs(rj - cj) <= 2);
        }
    }
}

TEST_CASE("term splitting: div(grad u) + div(u^2 grad u) is consistent") {
    auto ops = interior_grid_ops(5, 5);
    auto c = random_vector(25, 15, -0.5, 0.5);
    jp::Field u = jp::from_coefficients(ops, c);
    auto gu = jp::grad(ops, u);

    jp::Field whole = jp::div(ops, jp::mul(jp::add_scalar(jp::mul(u, u), 1.0), gu));
    jp::Field part1 = jp::div(ops, gu);
    jp::Field part2 = jp::div(ops, jp::mul(jp::mul(u, u), gu));
    for (size_t i = 0; i < whole.values.size(); ++i)
        CHECK(whole.values[i] == doctest::Approx(part1.values[i] + part2.values[i]).epsilon(1e-12));
    CHECK(to_dense(whole.jacobian)
              .isApprox(to_dense(part1.jacobian) + to_dense(part2.jacobian), 1e-10));
}

TEST_CASE("propagated sparsity never exceeds the operator pattern product") {
    auto ops = interior_grid_ops(6, 6);
    auto c = random_vector(36, 21);
    jp::Field f = worked_residual(ops, c);

    // Pattern bound: (|M_x| + |M_y| + I) applied twice to I.
    auto ones_like = [](const sp::SparseMatrix& m) {
        std::vector<sp::Triplet> t;
        for (int r = 0; r < m.rows(); ++r)
            for (int ccol : m.row_cols(r)) t.push_back({r, ccol, 1.0});
        return sp::SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(t));
    };
    auto reach = sp::add(sp::add(ones_like(ops.dx), ones_like(ops.dy)),
                         sp::SparseMatrix::identity(36));
    auto closure = sp::matmul(reach, reach);
    for (int r = 0; r < 36; ++r)
        for (int ccol : f.jacobian.row_cols(r)) CHECK(closure.coeff(r, ccol) != 0.0);
}

TEST_CASE("jacobians propagate in forward evaluation order") {
    std::vector<std::string> order;
    jp::set_trace_hook([&](const char* name) { order.emplace_back(name); });
    auto ops = interior_grid_ops(3, 3);
    auto c = random_vector(9, 2);
    worked_residual(ops, c);
    jp::set_trace_hook(nullptr);

    const std::vector<std::string> expected{
        "from_coefficients", "grad", "apply", "apply", "mul",  "add_scalar",
        "mul",               "mul",  "div",   "apply", "apply", "add"};
    CHECK(order == expected);
}
