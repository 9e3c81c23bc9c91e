#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace pclbench::cond {

/// Dense column-major matrix, small by construction (n <= 64 studies).
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // column-major

    double& at(int r, int c) { return data[static_cast<size_t>(c) * rows + static_cast<size_t>(r)]; }
    double at(int r, int c) const {
        return data[static_cast<size_t>(c) * rows + static_cast<size_t>(r)];
    }
    static DenseMatrix zero(int rows, int cols);
    static DenseMatrix identity(int n);
    static DenseMatrix diagonal(std::span<const double> d);
};

/// [[I, 0], [sqrt(lambda) A, -sqrt(lambda) y]]: the least-squares matrix of
/// the penalized model problem. Requires lambda > 0.
DenseMatrix assemble_A_lambda(const DenseMatrix& a, std::span<const double> y, double lambda);

struct Svd {
    std::vector<double> singular_values;  // descending
    DenseMatrix u;                        // left vectors (columns)
    DenseMatrix v;                        // right vectors (columns)
};

/// One-sided Jacobi SVD; accurate for the small, full-column-rank inputs of
/// this study.
Svd jacobi_svd(const DenseMatrix& m);

/// sigma_max / sigma_min; throws on rank deficiency
/// (sigma_min < 1e-14 sigma_max).
double condition_number(const DenseMatrix& m);

struct ConditioningStudy {
    DenseMatrix a;
    std::vector<double> y;
    std::vector<double> lambdas;  // increasing
};

struct TheoremRow {
    double lambda = 0.0;
    double kappa_a_lambda = 0.0;
    double kappa_a_squared = 0.0;
    double ratio = 0.0;  // kappa(A_lambda) / kappa(A)^2
};

/// kappa(A_lambda) across the lambda sweep against kappa(A)^2.
std::vector<TheoremRow> verify_theorem(const ConditioningStudy& study);

/// CSV: lambda,kappa_A_lambda,kappa_A_squared,ratio.
void write_theorem_csv(std::span<const TheoremRow> rows, std::ostream& out);

struct SecularResult {
    std::vector<double> eigenvalues;           // ascending roots of B
    std::vector<double> poles;                 // sigma_i^2 + 1/lambda, ascending
    std::vector<std::pair<double, double>> brackets;
    bool sign_change_confirmed = false;
    bool positive_definite = false;
    bool degenerate = false;  // some alpha_i vanished (boundary case)
};

/// Builds the arrowhead matrix B = [[1/lambda I + Sigma^2, alpha],
/// [alpha^T, y^T y]] from the SVD of SPD A and locates its eigenvalues by
/// bracketed bisection of the secular function.
SecularResult secular_check(const DenseMatrix& a, std::span<const double> y, double lambda);

}  // namespace pclbench::cond
