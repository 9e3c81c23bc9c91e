#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pclbench/autodiff.hpp"
#include "pclbench/nn.hpp"
#include "pclbench/pcl.hpp"

namespace pclbench::bench {

/// Midpoint-evaluated diffusivity f(u; theta) together with its u-derivative
/// and a tape recorder for the theta dependence at a batch of midpoints.
struct Diffusivity1D {
    std::function<double(double u, std::span<const double> theta)> value;
    std::function<double(double u, std::span<const double> theta)> du;
    std::function<int(ad::Tape& tape, int theta_node, std::span<const double> mids)> tape_values;
    int dim_theta = 0;
};

Diffusivity1D analytic_diffusivity(std::function<double(double)> f,
                                   std::function<double(double)> df);
Diffusivity1D nn_diffusivity(const nn::MLP& mlp);

/// 1D Poisson inverse problem d/dx(f(u) du/dx) = g on (0,1) with zero
/// Dirichlet boundary values. Unknowns are the n-1 interior nodal values.
struct Poisson1DProblem {
    int n = 31;                    // intervals
    Diffusivity1D f;
    std::vector<double> source;    // g at interior nodes, length n-1
    std::vector<int> observed;     // indices into the interior vector

    double h() const { return 1.0 / n; }
    int dim_u() const { return n - 1; }
};

/// Problem with g(x) sampled from a callable and full interior observation.
Poisson1DProblem make_poisson1d(int n, Diffusivity1D f,
                                const std::function<double(double)>& g);

std::vector<double> poisson1d_residual(const Poisson1DProblem& p, std::span<const double> theta,
                                       std::span<const double> u);
sp::SparseMatrix poisson1d_jacobian(const Poisson1DProblem& p, std::span<const double> theta,
                                    std::span<const double> u);

/// dL/du for the masked least-squares loss sum_{i in I_obs} (u_i - u_obs_i)^2.
std::vector<double> poisson1d_loss_grad(const Poisson1DProblem& p, std::span<const double> u,
                                        std::span<const double> u_obs);

pcl::ConstraintSystem poisson1d_constraint_system(const Poisson1DProblem& p);

/// Newton solve from u = 0; throws if it does not converge.
std::vector<double> poisson1d_forward(const Poisson1DProblem& p, std::span<const double> theta);

/// Assembles the PCL problem for given observations (taken on p.observed).
pcl::PCLProblem poisson1d_pcl_problem(const Poisson1DProblem& p, std::vector<double> u_obs);

}  // namespace pclbench::bench
