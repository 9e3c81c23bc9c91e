#pragma once

#include <atomic>
#include <span>
#include <stdexcept>
#include <vector>

namespace pclbench::sp {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Compressed-sparse-row matrix. Within each row, column indices are
/// strictly increasing; duplicate (row,col) entries are summed at assembly.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols);

    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
    static SparseMatrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(values_.size()); }

    std::span<const int> row_offsets() const { return row_offsets_; }
    std::span<const int> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

    std::span<const int> row_cols(int r) const {
        return {col_indices_.data() + row_offsets_[r],
                static_cast<size_t>(row_offsets_[r + 1] - row_offsets_[r])};
    }
    std::span<const double> row_values(int r) const {
        return {values_.data() + row_offsets_[r],
                static_cast<size_t>(row_offsets_[r + 1] - row_offsets_[r])};
    }

    /// Matrix infinity norm (max absolute row sum).
    double norm_inf() const;

    /// Entry lookup by binary search; zero if not stored.
    double coeff(int r, int c) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> col_indices_;
    std::vector<double> values_;

    friend SparseMatrix raw_csr(int, int, std::vector<int>, std::vector<int>, std::vector<double>);
};

/// Builds a CSR matrix from already-valid arrays (no duplicate merging).
SparseMatrix raw_csr(int rows, int cols, std::vector<int> row_offsets,
                     std::vector<int> col_indices, std::vector<double> values);

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);
std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x);

SparseMatrix transpose(const SparseMatrix& a);
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix scale(const SparseMatrix& a, double s);
SparseMatrix diag_left_mul(std::span<const double> d, const SparseMatrix& a);
SparseMatrix hstack(const SparseMatrix& a, const SparseMatrix& b);
SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b);

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sparse LU with partial row pivoting: P A = L U where row i of P A is
/// row perm[i] of A. L is unit lower triangular.
class LUFactors {
public:
    std::span<const int> perm() const { return perm_; }
    const SparseMatrix& lower() const { return lower_csr_; }
    const SparseMatrix& upper() const { return upper_csr_; }
    int dim() const { return n_; }

    friend LUFactors factorize(const SparseMatrix& a);
    friend std::vector<double> solve(const LUFactors& f, std::span<const double> b);
    friend std::vector<double> solve_transpose(const LUFactors& f, std::span<const double> b);

private:
    int n_ = 0;
    std::vector<int> perm_;  // perm_[i] = original row index of pivot i
    // Column-major storage used by the triangular solves.
    std::vector<int> l_colptr_, l_rows_;
    std::vector<double> l_vals_;
    std::vector<int> u_colptr_, u_rows_;
    std::vector<double> u_vals_;
    std::vector<double> u_diag_;
    SparseMatrix lower_csr_, upper_csr_;
};

LUFactors factorize(const SparseMatrix& a);
std::vector<double> solve(const LUFactors& f, std::span<const double> b);
std::vector<double> solve_transpose(const LUFactors& f, std::span<const double> b);

/// Operation counters used by cost-claim tests.
struct SolveStats {
    inline static std::atomic<long> factorizations{0};
    inline static std::atomic<long> solves{0};
    inline static std::atomic<long> transpose_solves{0};
    static void reset() {
        factorizations = 0;
        solves = 0;
        transpose_solves = 0;
    }
};

}  // namespace pclbench::sp
