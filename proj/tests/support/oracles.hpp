#pragma once

// Test-only helpers: dense mirrors of sparse structures and finite-difference
// oracles. These stay independent of the library's own solve paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pclbench/sparse.hpp"

namespace testsupport {

inline Eigen::MatrixXd to_dense(const pclbench::sp::SparseMatrix& a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (int r = 0; r < a.rows(); ++r) {
        auto cols = a.row_cols(r);
        auto vals = a.row_values(r);
        for (size_t k = 0; k < cols.size(); ++k) m(r, cols[k]) = vals[k];
    }
    return m;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
    return x;
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

/// Dense central-difference Jacobian of a vector map.
inline Eigen::MatrixXd fd_jacobian(
    const std::function<std::vector<double>(std::span<const double>)>& f,
    std::span<const double> x0, double step = 1e-6) {
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> fp, fm;
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd jac;
    for (int j = 0; j < n; ++j) {
        const double save = x[static_cast<size_t>(j)];
        x[static_cast<size_t>(j)] = save + step;
        fp = f(x);
        x[static_cast<size_t>(j)] = save - step;
        fm = f(x);
        x[static_cast<size_t>(j)] = save;
        if (j == 0) jac.resize(static_cast<Eigen::Index>(fp.size()), n);
        for (size_t i = 0; i < fp.size(); ++i)
            jac(static_cast<Eigen::Index>(i), j) = (fp[i] - fm[i]) / (2.0 * step);
    }
    return jac;
}

/// Central-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x0,
    double step = 1e-6) {
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> g(x.size());
    for (size_t j = 0; j < x.size(); ++j) {
        const double save = x[j];
        x[j] = save + step;
        const double fp = f(x);
        x[j] = save - step;
        const double fm = f(x);
        x[j] = save;
        g[j] = (fp - fm) / (2.0 * step);
    }
    return g;
}

/// Deterministic random sparse matrix with a guaranteed dominant diagonal
/// (so LU-based round trips stay well conditioned).
inline pclbench::sp::SparseMatrix random_diag_dominant(int n, std::uint64_t seed,
                                                       double density = 0.2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    std::vector<pclbench::sp::Triplet> t;
    std::vector<double> rowsum(static_cast<size_t>(n), 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c) continue;
            if (prob(rng) < density) {
                double v = unit(rng);
                t.push_back({r, c, v});
                rowsum[static_cast<size_t>(r)] += std::abs(v);
            }
        }
    for (int r = 0; r < n; ++r)
        t.push_back({r, r, rowsum[static_cast<size_t>(r)] + 1.0 + prob(rng)});
    return pclbench::sp::SparseMatrix::from_triplets(n, n, std::move(t));
}

inline pclbench::sp::SparseMatrix random_sparse(int rows, int cols, std::uint64_t seed,
                                                double density = 0.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    std::vector<pclbench::sp::Triplet> t;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (prob(rng) < density) t.push_back({r, c, unit(rng)});
    return pclbench::sp::SparseMatrix::from_triplets(rows, cols, std::move(t));
}

}  // namespace testsupport
