#pragma once

#include <array>
#include <memory>
#include <string>

#include "pclbench/iga.hpp"
#include "pclbench/pcl.hpp"

namespace pclbench::bench {

/// Parametric Helmholtz inverse problem: Laplacian u + k^2 g(x) u = 0 with
/// u = 1 on the boundary, g(x,y) = a x^2 + b x y + c y^2 + d x + e y + f,
/// observations are the normal derivatives at the boundary collocation
/// points. Discretized by NURBS collocation on the built-in meshes.
class HelmholtzProblem {
public:
    static constexpr std::array<double, 6> kThetaStar{5.0, 0.0, 2.0, 0.0, 0.0, 0.0};

    HelmholtzProblem(const std::string& domain, int refinement, double k);

    /// Solves A(theta) c = b and returns the coefficients.
    std::vector<double> forward(std::span<const double> theta) const;

    /// Normal derivatives at the boundary points for given coefficients.
    std::vector<double> observe(std::span<const double> c) const;

    /// Synthesizes observations at theta* (same discretization).
    void generate_observations();
    void set_observations(std::vector<double> obs) { observations_ = std::move(obs); }
    const std::vector<double>& observations() const { return observations_; }

    pcl::ConstraintSystem constraint_system() const;
    pcl::Loss loss() const;
    pcl::PCLProblem pcl_problem() const;

    const iga::CollocationSpace& space() const { return space_; }
    int dim_u() const { return space_.size(); }
    double k() const { return k_; }

    static double error(std::span<const double> theta);

private:
    std::vector<double> g_values(std::span<const double> theta) const;
    sp::SparseMatrix system_matrix(std::span<const double> theta) const;
    std::vector<double> rhs() const;

    std::string domain_;
    int refinement_ = 0;
    double k_ = 0.5;
    iga::CollocationSpace space_;
    sp::SparseMatrix laplace_;                       // dxx + dyy
    std::shared_ptr<const sp::SparseMatrix> d_normal_;  // |I_B| x N
    // Monomial values at the interior points: x^2, xy, y^2, x, y, 1.
    std::array<std::vector<double>, 6> monomials_;
    std::vector<double> observations_;
};

}  // namespace pclbench::bench
