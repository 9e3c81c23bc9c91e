#pragma once

#include <span>
#include <vector>

#include "pclbench/pcl.hpp"

namespace pclbench::penalty {

/// Joint unconstrained formulation: minimize L(u) + lambda ||F(theta,u)||_2^2
/// over z = [theta; u].
struct PenaltyProblem {
    pcl::ConstraintSystem system;
    pcl::Loss loss;
    double lambda = 0.0;

    int dim_z() const { return system.dim_theta + system.dim_u; }
};

struct PenaltyEval {
    double value = 0.0;
    std::vector<double> grad;  // over z = [theta; u]
};

PenaltyEval penalty_loss_and_grad(const PenaltyProblem& problem, std::span<const double> z);

/// Splits z into its theta and u blocks.
void unpack(const PenaltyProblem& problem, std::span<const double> z,
            std::vector<double>& theta, std::vector<double>& u);
std::vector<double> pack(const PenaltyProblem& problem, std::span<const double> theta,
                         std::span<const double> u);

}  // namespace pclbench::penalty
