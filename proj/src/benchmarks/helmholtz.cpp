#include "pclbench/benchmarks/helmholtz.hpp"

#include <cmath>
#include <stdexcept>

#include "pclbench/autodiff.hpp"

namespace pclbench::bench {

HelmholtzProblem::HelmholtzProblem(const std::string& domain, int refinement, double k)
    : domain_(domain), refinement_(refinement), k_(k) {
    if (refinement < 0 || refinement > 8)
        throw std::invalid_argument("HelmholtzProblem: refinement out of range");
    auto surface = iga::builtin_mesh(domain);
    for (int r = 0; r < refinement; ++r) surface = iga::h_refine(surface);
    space_ = iga::build_collocation(surface);
    laplace_ = sp::add(space_.ops.dxx, space_.ops.dyy);
    d_normal_ = std::make_shared<const sp::SparseMatrix>(iga::normal_derivative_matrix(space_));
    for (auto& m : monomials_) m.resize(space_.interior.size());
    for (size_t k_int = 0; k_int < space_.interior.size(); ++k_int) {
        const auto pt = space_.points[static_cast<size_t>(space_.interior[k_int])];
        monomials_[0][k_int] = pt.x * pt.x;
        monomials_[1][k_int] = pt.x * pt.y;
        monomials_[2][k_int] = pt.y * pt.y;
        monomials_[3][k_int] = pt.x;
        monomials_[4][k_int] = pt.y;
        monomials_[5][k_int] = 1.0;
    }
}

double HelmholtzProblem::error(std::span<const double> theta) {
    double s = 0.0;
    for (size_t i = 0; i < 6; ++i) {
        const double d = theta[i] - kThetaStar[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<double> HelmholtzProblem::g_values(std::span<const double> theta) const {
    std::vector<double> g(space_.interior.size(), 0.0);
    for (size_t j = 0; j < 6; ++j)
        for (size_t i = 0; i < g.size(); ++i) g[i] += theta[j] * monomials_[j][i];
    return g;
}

sp::SparseMatrix HelmholtzProblem::system_matrix(std::span<const double> theta) const {
    const int n = dim_u();
    std::vector<double> g = g_values(theta);
    std::vector<sp::Triplet> t;
    t.reserve(static_cast<size_t>(laplace_.nnz() + space_.ops.value_map.nnz()));
    for (size_t k_int = 0; k_int < space_.interior.size(); ++k_int) {
        const int row = space_.interior[k_int];
        auto cols = laplace_.row_cols(row);
        auto vals = laplace_.row_values(row);
        for (size_t e = 0; e < cols.size(); ++e) t.push_back({row, cols[e], vals[e]});
        const double scale = k_ * k_ * g[k_int];
        cols = space_.ops.value_map.row_cols(row);
        vals = space_.ops.value_map.row_values(row);
        for (size_t e = 0; e < cols.size(); ++e) t.push_back({row, cols[e], scale * vals[e]});
    }
    for (int row : space_.boundary) {
        auto cols = space_.ops.value_map.row_cols(row);
        auto vals = space_.ops.value_map.row_values(row);
        for (size_t e = 0; e < cols.size(); ++e) t.push_back({row, cols[e], vals[e]});
    }
    return sp::SparseMatrix::from_triplets(n, n, std::move(t));
}

std::vector<double> HelmholtzProblem::rhs() const {
    std::vector<double> b(static_cast<size_t>(dim_u()), 0.0);
    for (int row : space_.boundary) b[static_cast<size_t>(row)] = 1.0;  // u0 = 1
    return b;
}

std::vector<double> HelmholtzProblem::forward(std::span<const double> theta) const {
    sp::LUFactors lu = [&] {
        try {
            return sp::factorize(system_matrix(theta));
        } catch (const sp::SingularMatrixError&) {
            throw std::runtime_error("helmholtz: singular collocation system (resonant k?)");
        }
    }();
    return sp::solve(lu, rhs());
}

std::vector<double> HelmholtzProblem::observe(std::span<const double> c) const {
    return sp::spmv(*d_normal_, c);
}

void HelmholtzProblem::generate_observations() {
    observations_ = observe(forward(kThetaStar));
}

pcl::ConstraintSystem HelmholtzProblem::constraint_system() const {
    pcl::ConstraintSystem sys;
    sys.dim_u = dim_u();
    sys.dim_theta = 6;
    sys.residual = [this](std::span<const double> theta, std::span<const double> c) {
        std::vector<double> r = sp::spmv(system_matrix(theta), c);
        const std::vector<double> b = rhs();
        for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
        return r;
    };
    sys.jacobian_u = [this](std::span<const double> theta, std::span<const double>) {
        return system_matrix(theta);
    };
    sys.theta_pullback = [this](std::span<const double> theta, std::span<const double> c,
                                std::span<const double> w) {
        // w^T F depends on theta only through k^2 g(x; theta) u(x) at the
        // interior points; everything else rides along as constants.
        std::vector<double> mc = sp::spmv(space_.ops.value_map, c);
        const size_t ni = space_.interior.size();
        std::vector<double> mc_int(ni), w_int(ni);
        for (size_t i = 0; i < ni; ++i) {
            mc_int[i] = mc[static_cast<size_t>(space_.interior[i])];
            w_int[i] = w[static_cast<size_t>(space_.interior[i])];
        }

        ad::Tape tape;
        std::array<int, 6> coeffs;
        for (size_t j = 0; j < 6; ++j) coeffs[j] = tape.add_scalar_input(theta[j]);
        int g = tape.mul(coeffs[0], tape.constant(monomials_[0]));
        for (size_t j = 1; j < 6; ++j)
            g = tape.add(g, tape.mul(coeffs[j], tape.constant(monomials_[j])));
        int f_int = tape.mul(tape.constant(k_ * k_), tape.mul(g, tape.constant(std::move(mc_int))));
        tape.set_output(tape.dot(tape.constant(std::move(w_int)), f_int));
        std::vector<int> wrt(coeffs.begin(), coeffs.end());
        return ad::reverse_grad(tape, wrt);
    };
    return sys;
}

pcl::Loss HelmholtzProblem::loss() const {
    if (observations_.empty()) throw std::logic_error("helmholtz: observations not set");
    pcl::Loss l;
    const auto dn = d_normal_;
    const auto obs = observations_;
    const double inv_n = 1.0 / static_cast<double>(obs.size());
    l.value = [dn, obs, inv_n](std::span<const double> c) {
        auto pred = sp::spmv(*dn, c);
        double s = 0.0;
        for (size_t i = 0; i < obs.size(); ++i) {
            const double d = pred[i] - obs[i];
            s += d * d;
        }
        return inv_n * s;
    };
    l.grad = [dn, obs, inv_n](std::span<const double> c) {
        ad::Tape tape;
        int cn = tape.add_input(std::vector<double>(c.begin(), c.end()));
        int pred = tape.record_matvec(dn, cn);
        int diff = tape.sub(pred, tape.constant(obs));
        tape.set_output(tape.mul(tape.constant(inv_n), tape.sum(tape.mul(diff, diff))));
        return ad::reverse_grad(tape, std::array{cn});
    };
    return l;
}

pcl::PCLProblem HelmholtzProblem::pcl_problem() const {
    pcl::PCLProblem prob;
    prob.system = constraint_system();
    prob.loss = loss();
    prob.initial_u.assign(static_cast<size_t>(dim_u()), 0.0);
    return prob;
}

}  // namespace pclbench::bench
